"""Reference computation of the trigram-hash mock embedding and cosine values."""
import math
import unicodedata


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def embed(text: str, dim: int = 256):
    norm = unicodedata.normalize("NFC", " ".join(text.split())).casefold()
    padded = " " + norm + " "
    counts = [0.0] * dim
    for i in range(len(padded) - 2):
        counts[fnv1a64(padded[i:i + 3].encode("utf-8")) % dim] += 1.0
    n = math.sqrt(sum(c * c for c in counts))
    return [c / n for c in counts]


def cosine(u, v):
    dot = sum(a * b for a, b in zip(u, v))
    return dot / (math.sqrt(sum(a * a for a in u)) * math.sqrt(sum(b * b for b in v)))


if __name__ == "__main__":
    print("cos123456", repr(cosine([1, 2, 3], [4, 5, 6])))
    for a, b in [("the cat sat", "the cat sits"), ("gato negro", "Gato  NEGRO"), ("hello world", "zyxwv")]:
        print(a, "|", b, repr(cosine(embed(a), embed(b))))
    print("fnv abc", hex(fnv1a64(b"abc")))
