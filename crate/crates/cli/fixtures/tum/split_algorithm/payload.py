import hashlib

def bucket(window_id, seed=13):
    h = hashlib.sha256(f'{seed}:{window_id}'.encode()).digest()
    r = h[0] / 255.0
    if r < 0.7:
        return 'train'
    if r < 0.85:
        return 'val'
    return 'test'
