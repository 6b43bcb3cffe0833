"""Regenerates the small corpora, embeddings and dictionaries under fixtures/.

Every language draws its words from one shared set of concepts. A concept's
vector is Gaussian, complex concepts are pushed along a fixed axis, and each
language sees the concept vectors through its own random rotation plus a
little noise. Labels follow the concept, so a tagger trained in one language
can transfer through the aligned space.

    python3 fixtures/generate.py
"""

import json
import pathlib

import numpy as np

HERE = pathlib.Path(__file__).resolve().parent
DIM = 16
N_CONCEPTS = 240
N_IN_DICT = 200
SEED = 20180101

LANGS = ["en", "de", "es", "fr"]
SYLLABLES = {
    "en": ["ba", "ter", "lo", "min", "sha", "per", "dle", "ow", "ing", "ck"],
    "de": ["ge", "schla", "ber", "keit", "un", "dor", "ich", "lan", "zu", "ung"],
    "es": ["ca", "mi", "lla", "do", "ren", "ta", "bu", "que", "ción", "so"],
    "fr": ["bé", "lou", "ain", "que", "ron", "eau", "mi", "gne", "tte", "ou"],
}
SIZES = {
    ("en", "News"): {"Train": 150, "Dev": 60, "Test": 60},
    ("en", "WikiNews"): {"Train": 150, "Dev": 60, "Test": 60},
    ("en", "Wikipedia"): {"Train": 150, "Dev": 60, "Test": 60},
    ("de", "German"): {"Train": 180, "Dev": 60, "Test": 60},
    ("es", "Spanish"): {"Train": 180, "Dev": 60, "Test": 60},
    ("fr", "French"): {"Test": 120},
}


def make_words(rng, lang):
    syl = SYLLABLES[lang]
    seen = set()
    words = []
    while len(words) < N_CONCEPTS:
        n = 2 + int(rng.integers(0, 3))
        w = "".join(syl[int(i)] for i in rng.integers(0, len(syl), n))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(DIM, DIM)))
    return q * np.sign(np.diag(r))


def hit_id(rng):
    return "".join("0123456789ABCDEFGHJKLMNPQRSTVWXYZ"[int(i)] for i in rng.integers(0, 33, 30))


def sentences(rng, words, complex_mask, n_instances, lang):
    """Yields (sentence, [(start, end, target, label)]) until n_instances."""
    made = 0
    while made < n_instances:
        k = int(rng.integers(5, 10))
        idx = [int(i) for i in rng.choice(N_CONCEPTS, size=k, replace=False)]
        toks = [words[i] for i in idx]
        toks[0] = toks[0].capitalize()
        hyphen_at = None
        if rng.random() < 0.15:
            hyphen_at = k - 2
        text, spans = "", []
        for j, t in enumerate(toks):
            if j:
                text += "-" if hyphen_at == j - 1 else " "
            spans.append((len(text.encode("utf-8")), t, idx[j]))
            text += t
            if j == k // 2 and rng.random() < 0.3:
                text += ","
        text += "."
        insts = []
        for pos, (start, t, c) in enumerate(spans):
            if hyphen_at is not None and pos in (hyphen_at, hyphen_at + 1):
                continue
            end = start + len(t.encode("utf-8"))
            insts.append((start, end, t, int(complex_mask[c])))
        # one two-word phrase per few sentences
        if hyphen_at is None and rng.random() < 0.3:
            a, b = spans[1], spans[2]
            end = b[0] + len(b[1].encode("utf-8"))
            phrase = text.encode("utf-8")[a[0]:end].decode("utf-8")
            if phrase == f"{a[1]} {b[1]}":
                insts.append((a[0], end, phrase, int(complex_mask[a[2]] or complex_mask[b[2]])))
        insts = insts[: n_instances - made]
        made += len(insts)
        yield text, insts


def record(hid, text, inst, rng):
    start, end, target, label = inst
    if label:
        nat, non = int(rng.integers(1, 10)), int(rng.integers(1, 10))
    else:
        nat = non = 0
    prob = (nat + non) / 20
    return "\t".join(
        [hid, text, str(start), str(end), target, "10", "10", str(nat), str(non), str(label), f"{prob:g}"]
    )


def main():
    rng = np.random.default_rng(SEED)
    axis = rng.normal(size=DIM)
    axis /= np.linalg.norm(axis)
    concepts = rng.normal(size=(N_CONCEPTS, DIM))
    complex_mask = rng.random(N_CONCEPTS) < 0.3
    concepts[complex_mask] += 2.5 * axis
    concepts[~complex_mask] -= 0.5 * axis

    words = {l: make_words(rng, l) for l in LANGS}

    emb_dir = HERE / "embeddings"
    emb_dir.mkdir(exist_ok=True)
    rotations = {"en": np.eye(DIM)}
    for l in LANGS[1:]:
        rotations[l] = random_rotation(rng)
    for l in LANGS:
        vecs = concepts @ rotations[l] + 0.02 * rng.normal(size=concepts.shape)
        punct = rng.normal(size=(2, DIM))
        order = rng.permutation(N_CONCEPTS)
        rows = [(words[l][i], vecs[i]) for i in order] + [(".", punct[0]), (",", punct[1])]
        with open(emb_dir / f"{l}.vec", "w", encoding="utf-8") as f:
            f.write(f"{len(rows)} {DIM}\n")
            for w, v in rows:
                f.write(w + " " + " ".join(f"{x:.6f}" for x in v) + "\n")

    dict_dir = HERE / "dictionaries"
    dict_dir.mkdir(exist_ok=True)
    for l in LANGS[1:]:
        with open(dict_dir / f"en-{l}.txt", "w", encoding="utf-8") as f:
            for i in range(N_IN_DICT):
                f.write(f"{words['en'][i]} {words[l][i]}\n")

    data_dir = HERE / "data"
    data_dir.mkdir(exist_ok=True)
    counts = {}
    for (l, prefix), splits in SIZES.items():
        for split, n in splits.items():
            lines = []
            for text, insts in sentences(rng, words[l], complex_mask, n, l):
                hid = hit_id(rng)
                lines.extend(record(hid, text, inst, rng) for inst in insts)
            name = f"{prefix}_{split}.tsv"
            with open(data_dir / name, "w", encoding="utf-8") as f:
                f.write("\n".join(lines) + "\n")
            cx = sum(1 for ln in lines if ln.split("\t")[9] == "1")
            counts[name] = {"complex": cx, "noncomplex": len(lines) - cx}

    with open(HERE / "counts.json", "w", encoding="utf-8") as f:
        json.dump(counts, f, indent=2, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
