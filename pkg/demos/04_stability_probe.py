"""How sensitive is the state to the forcing?

For pairs of bounded random forcings, compare the distance between the
resulting states with the distance between the forcings. Smooth and
rough forcings are alternated. The ratios stay finite and within a narrow
band, which is what a Lipschitz-continuous control-to-state map predicts.
Rough forcings are mostly removed by the projection onto divergence-free
fields, so their ratios are smaller.

    python3 demos/04_stability_probe.py
"""

import numpy as np

from scho.config import parse_config_text
from scho.random_fields import rough_direction, smooth_direction
from scho.state import l2l2_norm_face, lipschitz_probe
from scho.workflows import build_problem

CONFIG = """
grid.nx = 32
grid.ny = 32
time.T = 0.05
time.nt = 50
control.K = 10
seed = 5
"""


def main(pairs=10):
    prob = build_problem(parse_config_text(CONFIG, "stability"))
    g, tg, K = prob.grid, prob.timegrid, prob.cfg["control.K"]
    rng = prob.rng.spawn()

    def draw(smooth):
        d = (smooth_direction if smooth else rough_direction)(g, tg.nt, rng)
        scale = K * rng.uniform(1, 0.2, 1.0)[0] / l2l2_norm_face(d, tg.dt)
        return [scale * x for x in d]

    ratios = []
    for k in range(pairs):
        smooth = k % 2 == 0
        a, b = draw(smooth), draw(smooth)
        r, _ = lipschitz_probe(a, b, prob.u0, prob.v0, g, prob.params, tg, prob.solver)
        ratios.append(r)
        gap = l2l2_norm_face([x - y for x, y in zip(a, b)], tg.dt)
        print(f"pair {k}  {'smooth' if smooth else 'rough '}  |d theta|={gap:6.3f}  ratio={r:.3e}")
    ratios = np.array(ratios)
    print(f"max / median ratio: {ratios.max() / np.median(ratios):.2f}")


if __name__ == "__main__":
    main()
