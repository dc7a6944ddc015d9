#include "fashionrag/genkit.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fashionrag/error.hpp"
#include "fashionrag/text.hpp"

namespace fashionrag::genkit {

namespace {

constexpr std::string_view kDefaultInstructions =
    "You are a fashion copywriter for social media. Write in a warm, confident, "
    "brand-friendly tone. Ground every statement in the supplied evidence: never invent "
    "garments, colors, fabrics or audiences that are not listed. Reply in plain text "
    "without markdown.";

constexpr std::string_view kDefaultCaptionTemplate =
    "Compose a fluent, image-driven caption of 2-3 sentences for the fashion photo "
    "described below. Mention the garments, their colors and the fabric when it is "
    "known.\n"
    "\n"
    "Detected garments:\n"
    "{detections}\n"
    "Attributes:\n"
    "{fabric}\n"
    "{gender}\n"
    "\n"
    "{snippets}\n"
    "\n"
    "Reply with the caption only.";

constexpr std::string_view kDefaultHashtagTemplate =
    "Generate 15-18 varied hashtags for the fashion post below, mixing broad, mid-tier "
    "and niche fashion keywords. Cover the garment types, colors, fabric and audience "
    "named in the evidence. Write each hashtag as #CamelCase without spaces.\n"
    "\n"
    "Evidence:\n"
    "{evidence}\n"
    "\n"
    "Caption:\n"
    "{caption}\n"
    "\n"
    "Reply with the hashtags only, separated by spaces.";

const std::vector<std::string> kCaptionPlaceholders = {"detections", "fabric", "gender",
                                                       "snippets"};
const std::vector<std::string> kHashtagPlaceholders = {"evidence", "caption"};

bool is_placeholder_char(char c) noexcept { return (c >= 'a' && c <= 'z') || c == '_'; }

// Calls on_placeholder(name, begin, end) for every `{name}` in the template.
template <typename F>
void scan_placeholders(std::string_view tpl, F&& on_placeholder) {
  std::size_t pos = 0;
  while ((pos = tpl.find('{', pos)) != std::string_view::npos) {
    std::size_t end = pos + 1;
    while (end < tpl.size() && is_placeholder_char(tpl[end])) ++end;
    if (end < tpl.size() && tpl[end] == '}' && end > pos + 1) {
      on_placeholder(tpl.substr(pos + 1, end - pos - 1), pos, end + 1);
      pos = end + 1;
    } else {
      ++pos;
    }
  }
}

void validate_template(std::string_view tpl, const std::vector<std::string>& expected,
                       std::string_view which) {
  std::map<std::string, int, std::less<>> counts;
  scan_placeholders(tpl, [&](std::string_view name, std::size_t, std::size_t) {
    if (std::find(expected.begin(), expected.end(), name) == expected.end()) {
      throw Error(ErrorCode::template_error,
                  std::string(which) + " template: unknown placeholder {" + std::string(name) + "}");
    }
    ++counts[std::string(name)];
  });
  for (const auto& name : expected) {
    const int n = counts.contains(name) ? counts.at(name) : 0;
    if (n != 1) {
      throw Error(ErrorCode::template_error,
                  std::string(which) + " template: placeholder {" + name + "} appears " +
                      std::to_string(n) + " times, expected exactly once");
    }
  }
}

std::string collapse_blank_lines(std::string s) {
  std::string out;
  int newlines = 0;
  for (char c : s) {
    if (c == '\n') {
      if (++newlines > 2) continue;
    } else {
      newlines = 0;
    }
    out.push_back(c);
  }
  return std::string(text::trim(out));
}

std::string substitute(std::string_view tpl, const std::vector<std::string>& expected,
                       std::string_view which, const std::map<std::string, std::string>& values) {
  validate_template(tpl, expected, which);
  std::string out;
  std::size_t last = 0;
  scan_placeholders(tpl, [&](std::string_view name, std::size_t begin, std::size_t end) {
    out.append(tpl.substr(last, begin - last));
    out.append(values.at(std::string(name)));
    last = end;
  });
  out.append(tpl.substr(last));
  return collapse_blank_lines(std::move(out));
}

std::string render_detections(const EvidencePack& pack) {
  if (pack.detections.empty()) return "- none detected";
  std::string out;
  for (const auto& d : pack.detections) {
    if (!out.empty()) out += '\n';
    out += "- " + d.primary_color + " " + d.class_name;
    if (d.secondary_color) out += " (accent: " + *d.secondary_color + ")";
  }
  return out;
}

std::string render_attribute(const retrieval::AttributePrediction& a) {
  const std::string name(retrieval::to_string(a.facet));
  if (!a.known()) return "- " + name + ": unspecified — do not invent";
  return "- " + name + ": " + a.label;
}

std::string render_snippets(const EvidencePack& pack) {
  if (pack.snippets.empty()) return {};
  std::string out = "Style examples from similar catalog items (match their tone, do not copy them):";
  for (const auto& s : pack.snippets) out += "\n- " + s;
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

class TagSet {
 public:
  explicit TagSet(std::vector<std::string>& tags) : tags_(tags) {
    for (const auto& t : tags_) seen_.insert(text::to_lower(t));
  }

  bool add(std::string tag) {
    if (tag.size() < 2) return false;
    if (!seen_.insert(text::to_lower(tag)).second) return false;
    tags_.push_back(std::move(tag));
    return true;
  }

  std::size_t size() const noexcept { return tags_.size(); }

 private:
  std::vector<std::string>& tags_;
  std::set<std::string> seen_;
};

std::string sentence_case(std::string s) {
  if (!s.empty() && s.front() >= 'a' && s.front() <= 'z') s.front() = static_cast<char>(s.front() - 'a' + 'A');
  return s;
}

}  // namespace

EvidencePack build_evidence_pack(const std::vector<detect::Detection>& dets,
                                 retrieval::AttributePrediction fabric,
                                 retrieval::AttributePrediction gender,
                                 std::vector<std::string> snippets) {
  EvidencePack pack;
  for (const auto& d : dets) {
    if (!d.colors) {
      throw Error(ErrorCode::degenerate_input,
                  "detection '" + d.class_name + "' has no color descriptor");
    }
    GarmentEvidence g;
    g.class_name = d.class_name;
    g.primary_color = d.colors->primary.name;
    if (d.colors->secondary) g.secondary_color = d.colors->secondary->name;
    g.confidence = d.confidence;
    pack.detections.push_back(std::move(g));
  }
  std::stable_sort(pack.detections.begin(), pack.detections.end(),
                   [](const GarmentEvidence& a, const GarmentEvidence& b) {
                     return a.confidence > b.confidence;
                   });
  fabric.facet = retrieval::Facet::fabric;
  gender.facet = retrieval::Facet::gender;
  pack.fabric = std::move(fabric);
  pack.gender = std::move(gender);
  if (snippets.size() > kMaxSnippets) snippets.resize(kMaxSnippets);
  pack.snippets = std::move(snippets);
  return pack;
}

PromptTemplate PromptTemplate::defaults() {
  return PromptTemplate{std::string(kDefaultInstructions), std::string(kDefaultCaptionTemplate),
                        std::string(kDefaultHashtagTemplate)};
}

PromptTemplate PromptTemplate::load_dir(const std::filesystem::path& dir) {
  PromptTemplate tpl = defaults();
  if (std::filesystem::exists(dir / "system.txt")) tpl.instructions = read_text_file(dir / "system.txt");
  if (std::filesystem::exists(dir / "caption.txt")) {
    tpl.caption_template = read_text_file(dir / "caption.txt");
  }
  if (std::filesystem::exists(dir / "hashtags.txt")) {
    tpl.hashtag_template = read_text_file(dir / "hashtags.txt");
  }
  tpl.validate();
  return tpl;
}

void PromptTemplate::validate() const {
  validate_template(caption_template, kCaptionPlaceholders, "caption");
  validate_template(hashtag_template, kHashtagPlaceholders, "hashtag");
}

std::string render_caption_prompt(const EvidencePack& pack, const PromptTemplate& tpl) {
  return substitute(tpl.caption_template, kCaptionPlaceholders, "caption",
                    {{"detections", render_detections(pack)},
                     {"fabric", render_attribute(pack.fabric)},
                     {"gender", render_attribute(pack.gender)},
                     {"snippets", render_snippets(pack)}});
}

std::string serialize_evidence(const EvidencePack& pack) {
  std::string out = "Garments:\n" + render_detections(pack) + "\nAttributes:\n" +
                    render_attribute(pack.fabric) + "\n" + render_attribute(pack.gender);
  if (!pack.snippets.empty()) out += "\n" + render_snippets(pack);
  return out;
}

std::string render_hashtag_prompt(const EvidencePack& pack, std::string_view caption,
                                  const PromptTemplate& tpl) {
  return substitute(tpl.hashtag_template, kHashtagPlaceholders, "hashtag",
                    {{"evidence", serialize_evidence(pack)}, {"caption", std::string(caption)}});
}

std::string_view to_string(Provenance p) noexcept {
  return p == Provenance::llm ? "llm" : "fallback";
}

const std::vector<std::string>& broad_hashtags() {
  static const std::vector<std::string> tags = {
      "#Fashion",         "#Style",         "#OOTD",          "#OutfitOfTheDay",
      "#FashionInspo",    "#StyleInspo",    "#WhatIWore",     "#InstaFashion",
      "#FashionDaily",    "#LookOfTheDay",  "#StreetStyle",   "#FashionLover",
      "#StyleGoals",      "#TrendAlert",    "#WardrobeEssentials", "#EverydayStyle",
      "#FashionBlogger",  "#NewCollection",
  };
  return tags;
}

PostBundle fallback_generate(const EvidencePack& pack) {
  PostBundle bundle;
  bundle.provenance = Provenance::fallback;
  bundle.evidence = pack;
  TagSet tags(bundle.hashtags);

  if (pack.detections.empty()) {
    bundle.caption = "Fresh looks coming soon.";
    for (const auto& t : broad_hashtags()) {
      if (tags.size() >= kMinHashtags) break;
      tags.add(t);
    }
    return bundle;
  }

  std::string caption;
  for (std::size_t i = 0; i < pack.detections.size(); ++i) {
    const auto& d = pack.detections[i];
    caption += (i == 0 ? "A " : " paired with a ") + d.primary_color + " " + d.class_name;
  }
  caption += ".";
  const bool fabric_known = pack.fabric.known();
  const bool gender_known = pack.gender.known();
  if (fabric_known && gender_known) {
    caption += " Crafted in " + pack.fabric.label + ", a perfect pick for " + pack.gender.label +
               " fashion.";
  } else if (fabric_known) {
    caption += " Crafted in " + pack.fabric.label + ".";
  } else if (gender_known) {
    caption += " " + sentence_case("a perfect pick for " + pack.gender.label + " fashion.");
  }
  bundle.caption = std::move(caption);

  std::vector<std::string> specific;
  for (const auto& d : pack.detections) {
    specific.push_back("#" + text::pascal_case(d.primary_color) + text::pascal_case(d.class_name));
    specific.push_back("#" + text::pascal_case(d.class_name));
  }
  if (fabric_known) specific.push_back("#" + text::pascal_case(pack.fabric.label) + "Clothing");
  if (gender_known) specific.push_back("#" + text::pascal_case(pack.gender.label) + "Fashion");
  for (auto& t : specific) {
    if (tags.size() >= kMaxHashtags) break;
    tags.add(std::move(t));
  }
  for (const auto& t : broad_hashtags()) {
    if (tags.size() >= kMinHashtags) break;
    tags.add(t);
  }
  return bundle;
}

std::vector<std::string> parse_hashtags(std::string_view s) {
  std::vector<std::string> out;
  TagSet tags(out);
  std::size_t i = 0;
  while ((i = s.find('#', i)) != std::string_view::npos) {
    std::size_t end = i + 1;
    while (end < s.size()) {
      const char c = s[end];
      const bool word = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_';
      if (!word) break;
      ++end;
    }
    if (end > i + 1) tags.add(std::string(s.substr(i, end - i)));
    i = end;
  }
  return out;
}

std::size_t finalize_hashtags(std::vector<std::string>& tags, const EvidencePack& pack) {
  // Re-parse so only well-formed, unique tags survive regardless of the source.
  std::string joined;
  for (const auto& t : tags) joined += t + ' ';
  tags = parse_hashtags(joined);
  if (tags.size() > kMaxHashtags) tags.resize(kMaxHashtags);

  const std::size_t before = tags.size();
  if (tags.size() < kMinHashtags) {
    TagSet set(tags);
    for (const auto& t : fallback_generate(pack).hashtags) {
      if (set.size() >= kMinHashtags) break;
      set.add(t);
    }
    for (const auto& t : broad_hashtags()) {
      if (set.size() >= kMinHashtags) break;
      set.add(t);
    }
  }
  return tags.size() - before;
}

std::string finalize_caption(std::string_view raw) {
  std::string_view trimmed = text::trim(raw);
  if (trimmed.size() >= 2 && trimmed.front() == '"' && trimmed.back() == '"') {
    trimmed = text::trim(trimmed.substr(1, trimmed.size() - 2));
  }
  const auto sentences = text::split_sentences(trimmed);
  if (sentences.size() <= 5) return std::string(trimmed);
  return sentences[0] + " " + sentences[1] + " " + sentences[2];
}

nlohmann::json to_json(const retrieval::AttributePrediction& a) {
  nlohmann::json votes = nlohmann::json::array();
  for (const auto& [label, score] : a.votes) votes.push_back({label, score});
  return nlohmann::json{{"facet", retrieval::to_string(a.facet)},
                        {"label", a.label},
                        {"confidence", a.confidence},
                        {"votes", std::move(votes)}};
}

nlohmann::json to_json(const EvidencePack& pack) {
  nlohmann::json dets = nlohmann::json::array();
  for (const auto& d : pack.detections) {
    nlohmann::json j{{"class", d.class_name},
                     {"primary_color", d.primary_color},
                     {"confidence", d.confidence}};
    j["secondary_color"] = d.secondary_color ? nlohmann::json(*d.secondary_color) : nlohmann::json(nullptr);
    dets.push_back(std::move(j));
  }
  return nlohmann::json{{"detections", std::move(dets)},
                        {"attributes", {{"fabric", to_json(pack.fabric)}, {"gender", to_json(pack.gender)}}},
                        {"snippets", pack.snippets}};
}

nlohmann::json to_json(const PostBundle& bundle) {
  return nlohmann::json{{"caption", bundle.caption},
                        {"hashtags", bundle.hashtags},
                        {"provenance", to_string(bundle.provenance)},
                        {"evidence", to_json(bundle.evidence)}};
}

}  // namespace fashionrag::genkit
