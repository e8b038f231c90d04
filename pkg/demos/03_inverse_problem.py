"""Recover a stirring force from what it did.

Targets are generated by running the model with a known vortex forcing
(amplitude 0.3, switched on and off smoothly). Starting from no control,
projected gradient descent with an Armijo line search minimises the
tracking cost. Regularisation keeps the problem well posed, so the recovered
forcing is close to, but not exactly, the one that made the data.

    python3 demos/03_inverse_problem.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from scho import control as ctl
from scho.config import parse_config
from scho.fieldio import write_csv
from scho.workflows import build_problem, control_from_config, opt_config

HERE = Path(__file__).parent


def main(out=None):
    cfg = parse_config(HERE / "configs" / "inverse.cfg")
    prob = build_problem(cfg)
    dt = prob.timegrid.dt

    def show(k, theta, J, res):
        if k % 5 == 0:
            print(f"iter {k:3d}  J={J:.4e}  residual={res:.2e}")

    st = ctl.projected_gradient_descent(prob.u0, prob.v0, prob.cost, prob.grid, prob.params,
                                        prob.timegrid, opt_config(cfg), theta0=prob.theta,
                                        solver=prob.solver, callback=show)
    print(st.message)
    print(f"J reduced by a factor {st.J_history[0] / st.J_history[-1]:.0f} in {st.iterations} iterations")

    # compare against the forcing that generated the targets
    amp = cfg["targets.amplitude"]
    truth = ctl.vortex_control(prob.grid, prob.timegrid.nt, amp,
                               profile=lambda n: np.sin(np.pi * n / prob.timegrid.nt) ** 2)
    err = ctl.axpy(-1.0, truth, st.theta)
    rel = ctl.control_norm(err, dt) / ctl.control_norm(truth, dt)
    print(f"relative distance to the generating forcing: {rel:.2f}")

    if out:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        rows = zip(range(len(st.J_history)), st.J_history, st.residual_history, st.step_history)
        write_csv(out / "history.csv", ["iteration", "J", "residual", "step"], rows)
        print(f"wrote {out / 'history.csv'}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
