"""Minimal SVG emission for networks and cover-function panels."""

from __future__ import annotations

import math


class SvgCanvas:
    def __init__(self, xmin, ymin, xmax, ymax, width=480):
        pad = 0.05 * max(xmax - xmin, ymax - ymin, 1e-9)
        self.x0, self.y0 = xmin - pad, ymin - pad
        self.x1, self.y1 = xmax + pad, ymax + pad
        self.width = width
        self.height = int(width * (self.y1 - self.y0) / (self.x1 - self.x0))
        self.items: list[str] = []

    def _pt(self, x, y):
        sx = (x - self.x0) / (self.x1 - self.x0) * self.width
        sy = (self.y1 - y) / (self.y1 - self.y0) * self.height
        return sx, sy

    def line(self, a, b, color="black", width=2.0):
        (x1, y1), (x2, y2) = self._pt(*a), self._pt(*b)
        self.items.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{color}" stroke-width="{width}"/>')

    def circle(self, c, r=4.0, color="black"):
        x, y = self._pt(*c)
        self.items.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{color}"/>')

    def polygon(self, pts, fill="none", stroke="gray", width=0.8, opacity=1.0):
        s = " ".join("{:.2f},{:.2f}".format(*self._pt(x, y)) for x, y in pts)
        self.items.append(
            f'<polygon points="{s}" fill="{fill}" stroke="{stroke}" '
            f'stroke-width="{width}" fill-opacity="{opacity}"/>')

    def text(self, p, s, size=14):
        x, y = self._pt(*p)
        self.items.append(f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}">{s}</text>')

    def to_string(self) -> str:
        body = "\n".join(self.items)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
                f"{body}\n</svg>\n")

    def save(self, path):
        with open(path, "w") as f:
            f.write(self.to_string())


def draw_network(config, tree, path):
    pts = [p.as_tuple() for p in config.points]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    cv = SvgCanvas(min(xs), min(ys), max(xs), max(ys))
    for a, b in tree.edge_segments(config):
        cv.line(a.as_tuple(), b.as_tuple(), color="#1f4e79", width=2.5)
    for p in pts:
        cv.circle(p, 4.5, "#b22222")
    for j in tree.junctions:
        cv.circle(j.as_tuple(), 3.0, "#1f4e79")
    cv.save(path)


def _gray(v):
    g = int(round(255 * (1.0 - 0.75 * min(max(v, 0.0), 1.0))))
    return f"rgb({g},{255 - (255 - g) // 2},{g})"


def draw_cover_sheets(u, path, title=""):
    """One panel per sheet; faces filled by value (white 0, green-ish 1)."""
    verts = u.complex.vertices
    xs = [p.x for p in verts]
    ys = [p.y for p in verts]
    w, h = max(xs) - min(xs), max(ys) - min(ys)
    gap = 0.12 * w
    cv = SvgCanvas(min(xs), min(ys), max(xs) + (u.n - 1) * (w + gap), max(ys), width=260 * u.n)
    for s in range(u.n):
        dx = s * (w + gap)
        for f in range(len(u.complex.faces)):
            loop = [(p.x + dx, p.y) for p in u.complex.face_loop(f)]
            cv.polygon(loop, fill=_gray(u.values[s, f]), stroke="#555555", width=0.6)
        for p in u.cover.config.points:
            cv.circle((p.x + dx, p.y), 3.0, "#b22222")
        cv.text((min(xs) + dx, max(ys)), f"sheet {s + 1}", size=13)
    if title:
        cv.text((min(xs), min(ys)), title, size=14)
    cv.save(path)
