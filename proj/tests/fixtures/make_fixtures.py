"""Regenerates the shipped fixture files. Run from this directory."""
import json
import struct

import numpy as np
from PIL import Image

W, H = 160, 120
DIM = 16

img = np.full((H, W, 3), 245, dtype=np.uint8)
# shirt: navy with a white band over the lower quarter of its box
img[10:70, 10:80] = (0, 0, 128)
img[55:70, 10:80] = (255, 255, 255)
# trousers: plain maroon
img[20:110, 90:150] = (128, 0, 0)
Image.fromarray(img, "RGB").save("image.png", optimize=False)
Image.fromarray(img, "RGB").save("image.jpg", quality=95)

detections = {
    "image_id": "look_001",
    "image_path": "image.png",
    "detections": [
        {"class": "shirt", "box": [10, 10, 80, 70], "conf": 0.91},
        {"class": "trousers", "box": [90, 20, 150, 110], "conf": 0.84},
        {"class": "shirt", "box": [12, 10, 80, 68], "conf": 0.66},
        {"class": "hat", "box": [0, 0, 20, 20], "conf": 0.2},
    ],
}
with open("detections.jsonl", "w") as f:
    f.write(json.dumps(detections) + "\n")

catalog = [
    ("p01", "Navy Cotton Oxford Shirt", "Crisp oxford weave. Button-down collar.", "cotton", "women", "navy", "shirt"),
    ("p02", "Relaxed Cotton Shirt", "Everyday relaxed fit.", "cotton", "women", "white", "shirt"),
    ("p03", "Tailored Wool Trousers", "Pressed crease. High rise.", "wool", "women", "maroon", "trousers"),
    ("p04", "Striped Cotton Tee", "Breton stripes.", "Cotton", "Women", "navy", "t-shirt"),
    ("p05", "Silk Slip Dress", "Bias cut silk.", "silk", "women", "burgundy", "dress"),
    ("p06", "Denim Trucker Jacket", "Classic denim layer.", "denim", "men", "blue", "jacket"),
    ("p07", "Linen Camp Shirt", "Linen camp collar shirt. Boxy fit.", "linen", "men", "beige", "shirt"),
    ("p08", "Wide Leg Trousers", "Fluid drape.", None, "women", "black", "trousers"),
    ("p09", "Chino Trousers", "Garment dyed cotton twill.", "cotton", "men", "khaki", "trousers"),
    ("p10", "Knit Polo", "Fine gauge knit.", "cotton", None, "navy", "shirt"),
]
with open("catalog.jsonl", "w") as f:
    for pid, title, desc, fabric, gender, color, category in catalog:
        f.write(json.dumps({"id": pid, "title": title, "description": desc, "fabric": fabric,
                            "gender": gender, "color": color, "category": category}) + "\n")

rng = np.random.default_rng(7)
emb = rng.normal(size=(len(catalog), DIM))
emb /= np.linalg.norm(emb, axis=1, keepdims=True)
emb = emb.astype("<f4")
with open("embeddings.bin", "wb") as f:
    f.write(b"RAGF")
    f.write(struct.pack("<III", 1, emb.shape[0], emb.shape[1]))
    f.write(emb.tobytes())

q = emb[0].astype(np.float64) * 0.8 + emb[1] * 0.5 + emb[2] * 0.3 + rng.normal(scale=0.05, size=DIM)
q /= np.linalg.norm(q)
with open("queries.jsonl", "w") as f:
    f.write(json.dumps({"image_id": "look_001", "embedding": [round(float(v), 8) for v in q]}) + "\n")
