import numpy as np, struct
from skimage.metrics import structural_similarity, peak_signal_noise_ratio
from scipy.ndimage import gaussian_filter

def save_pgm(path, img):
    h, w = img.shape
    open(path, 'wb').write(f"P5\n{w} {h}\n255\n".encode() + img.astype(np.uint8).tobytes())

def load_pgm(path):
    data = open(path,'rb').read()
    parts = data.split(b'\n', 3)
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)

def sequency_walsh(n):
    H = np.array([[(-1)**bin(i & j).count('1') for j in range(n)] for i in range(n)])
    changes = [(np.diff(r) != 0).sum() for r in H]
    return H[np.argsort(changes)]

def csm(img, m):
    W = sequency_walsh(64)
    phi = (W[:m] + 1) // 2
    h, w = img.shape
    bh, bw = -(-h // 8), -(-w // 8)
    pad = np.pad(img, ((0, bh*8-h), (0, bw*8-w)), mode='edge').astype(np.int64)
    ys = []
    for by in range(bh):
        for bx in range(bw):
            x = pad[by*8:by*8+8, bx*8:bx*8+8].reshape(64)
            ys.extend(phi @ x)
    out = b"CSM1" + bytes([1]) + struct.pack('<HHII', m, 64, w, h)
    out += b''.join(struct.pack('<H', int(v)) for v in ys)
    return out

rng = np.random.default_rng(20240611)
imgs = {
    'tiny_8x8': rng.integers(0, 256, (8, 8)),
    'gradient_16x8': np.array([[(x*13 + y*29) % 256 for x in range(16)] for y in range(8)]),
    'odd_12x10': rng.integers(0, 256, (10, 12)),
}
for (name, m) in [('tiny_8x8', 16), ('gradient_16x8', 16), ('odd_12x10', 32), ('gradient_16x8', 48)]:
    img = imgs[name].astype(np.uint8)
    save_pgm(f"{name}.pgm", img)
    open(f"{name}_m{m}.csm", 'wb').write(csm(img, m))

corpus = '../corpus/'
cam = load_pgm(corpus + 'camera.pgm')[40:104, 100:164]
moon = load_pgm(corpus + 'moon.pgm')[80:160, 60:156]
noisy = np.clip(np.round(cam + rng.normal(0, 10, cam.shape)), 0, 255).astype(np.uint8)
blur = np.clip(np.round(gaussian_filter(moon.astype(float), 1.2)), 0, 255).astype(np.uint8)
quant = ((cam // 32) * 32 + 16).astype(np.uint8)
pairs = [('camera_crop', cam, 'camera_noisy', noisy), ('moon_crop', moon, 'moon_blur', blur), ('camera_crop', cam, 'camera_quant', quant)]
rows = ["reference,test,psnr,ssim"]
for rn, r, tn, t in pairs:
    save_pgm(f"{rn}.pgm", r); save_pgm(f"{tn}.pgm", t)
    p = peak_signal_noise_ratio(r, t, data_range=255)
    s = structural_similarity(r, t, gaussian_weights=True, sigma=1.5, use_sample_covariance=False, data_range=255)
    rows.append(f"{rn}.pgm,{tn}.pgm,{p:.6f},{s:.6f}")
open('metrics.csv', 'w').write("\n".join(rows) + "\n")
print("\n".join(rows))
