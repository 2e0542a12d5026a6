"""Seeded refiner weights and their binary container.

Every tensor is drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)]
using its own counter-based stream ``(seed, tensor_index)``, so a
(config, seed) pair always regenerates the same weights.

Container layout (all integers little-endian)::

    magic        8 bytes   b"DDLSFFW1"
    seed         u64
    config_len   u32       followed by config_len bytes of UTF-8 JSON
    n_tensors    u32
    per tensor:  u16 name_len, name (UTF-8), u8 ndim, ndim x u32 dims
    checksum     32 bytes  SHA-256 of the payload
    payload      float64 little-endian, tensors in header order, C order
"""

import hashlib
import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import rng
from ..stackio import atomic_path

MAGIC = b"DDLSFFW1"
SCALES = (4, 8, 16)


@dataclass(frozen=True)
class RefinerConfig:
    in_channels: int = 1
    u_channels: int = 40
    hidden: int = 128
    fusion: int = 128
    head_hidden: int = 128
    encoder_widths: tuple = (32, 64, 96, 128)

    def __post_init__(self):
        object.__setattr__(self, "encoder_widths", tuple(int(c) for c in self.encoder_widths))

    def b_channels(self, q):
        """Auxiliary GRU input width at scale ``q``."""
        return {16: self.hidden, 8: 2 * self.hidden, 4: self.fusion + self.hidden}[q]

    def tensor_specs(self):
        """Ordered (name, shape) list; fan-in is the product of dims after the first."""
        h = self.hidden
        e0, e1, e2, e3 = self.encoder_widths
        specs = [("enc.stem.w", (e0, self.in_channels, 3, 3)), ("enc.stem.b", (e0,))]
        for i, (cin, cout) in enumerate(((e0, e1), (e1, e2), (e2, e3)), start=1):
            specs += [
                (f"enc.stage{i}.conv1.w", (cout, cin, 3, 3)), (f"enc.stage{i}.conv1.b", (cout,)),
                (f"enc.stage{i}.conv2.w", (cout, cout, 3, 3)), (f"enc.stage{i}.conv2.b", (cout,)),
                (f"enc.stage{i}.skip.w", (cout, cin, 1, 1)), (f"enc.stage{i}.skip.b", (cout,)),
            ]
        for q, cin in zip(SCALES, (e1, e2, e3)):
            specs += [(f"enc.head{q}.w", (3 * h, cin, 3, 3)), (f"enc.head{q}.b", (3 * h,))]
        for q in SCALES:
            cin = h + self.b_channels(q)
            for gate in ("z", "r", "h"):
                specs.append((f"gru{q}.w{gate}", (h, cin, 3, 3)))
        specs += [
            ("fuse.conv1.w", (self.fusion, 1 + self.u_channels, 3, 3)), ("fuse.conv1.b", (self.fusion,)),
            ("fuse.conv2.w", (self.fusion, self.fusion, 3, 3)), ("fuse.conv2.b", (self.fusion,)),
            ("depth.conv1.w", (self.head_hidden, h, 3, 3)), ("depth.conv1.b", (self.head_hidden,)),
            ("depth.conv2.w", (1, self.head_hidden, 3, 3)), ("depth.conv2.b", (1,)),
            ("mask.conv1.w", (self.head_hidden, h, 3, 3)), ("mask.conv1.b", (self.head_hidden,)),
            ("mask.conv2.w", (9 * 16, self.head_hidden, 1, 1)), ("mask.conv2.b", (9 * 16,)),
        ]
        return specs


def _fan_in(name, shape, specs_by_name):
    if name.endswith(".b"):
        wshape = specs_by_name[name[:-2] + ".w"]
        return int(np.prod(wshape[1:]))
    return int(np.prod(shape[1:]))


@dataclass
class RefinerWeights:
    config: RefinerConfig
    seed: int
    tensors: dict = field(default_factory=dict)

    @classmethod
    def generate(cls, config, seed):
        specs = config.tensor_specs()
        by_name = dict(specs)
        tensors = {}
        for i, (name, shape) in enumerate(specs):
            bound = 1.0 / np.sqrt(_fan_in(name, shape, by_name))
            u = rng.uniforms(seed, i, int(np.prod(shape)))
            tensors[name] = ((2.0 * u - 1.0) * bound).reshape(shape)
        return cls(config, int(seed), tensors)

    def __getitem__(self, name):
        return self.tensors[name]

    def with_zeroed(self, prefix):
        """Copy with every tensor whose name starts with ``prefix`` set to zero."""
        hit = [k for k in self.tensors if k.startswith(prefix)]
        if not hit:
            raise KeyError(f"no tensors match {prefix!r}")
        tensors = {k: (np.zeros_like(v) if k in hit else v) for k, v in self.tensors.items()}
        return RefinerWeights(self.config, self.seed, tensors)

    def checksum(self):
        return hashlib.sha256(self._payload()).hexdigest()

    def _payload(self):
        return b"".join(np.ascontiguousarray(self.tensors[n], dtype="<f8").tobytes()
                        for n, _ in self.config.tensor_specs())

    def save(self, path):
        specs = self.config.tensor_specs()
        cfg = json.dumps(asdict(self.config), sort_keys=True).encode()
        head = [MAGIC, struct.pack("<QI", self.seed, len(cfg)), cfg, struct.pack("<I", len(specs))]
        for name, _ in specs:
            shape = self.tensors[name].shape
            nb = name.encode()
            head.append(struct.pack("<H", len(nb)) + nb + struct.pack("<B", len(shape))
                        + struct.pack(f"<{len(shape)}I", *shape))
        payload = self._payload()
        head.append(hashlib.sha256(payload).digest())
        with atomic_path(path) as tmp:
            with open(tmp, "wb") as fh:
                fh.write(b"".join(head))
                fh.write(payload)

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            buf = fh.read()
        if buf[:8] != MAGIC:
            raise ValueError(f"{path}: not a refiner weight file")
        pos = 8
        seed, cfg_len = struct.unpack_from("<QI", buf, pos)
        pos += 12
        config = RefinerConfig(**json.loads(buf[pos:pos + cfg_len]))
        pos += cfg_len
        (n,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        entries = []
        for _ in range(n):
            (ln,) = struct.unpack_from("<H", buf, pos)
            pos += 2
            name = buf[pos:pos + ln].decode()
            pos += ln
            (nd,) = struct.unpack_from("<B", buf, pos)
            pos += 1
            shape = struct.unpack_from(f"<{nd}I", buf, pos)
            pos += 4 * nd
            entries.append((name, shape))
        digest = buf[pos:pos + 32]
        payload = buf[pos + 32:]
        if hashlib.sha256(payload).digest() != digest:
            raise ValueError(f"{path}: checksum mismatch")
        expected = [(name, tuple(s)) for name, s in config.tensor_specs()]
        if [(nm, tuple(s)) for nm, s in entries] != expected:
            raise ValueError(f"{path}: tensor table does not match its config")
        tensors = {}
        off = 0
        for name, shape in entries:
            count = int(np.prod(shape))
            tensors[name] = np.frombuffer(payload, dtype="<f8", count=count, offset=off).astype(np.float64).reshape(shape)
            off += 8 * count
        if off != len(payload):
            raise ValueError(f"{path}: payload size mismatch")
        return cls(config, int(seed), tensors)
