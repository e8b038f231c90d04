"""Are the derivatives right? Four independent checks at one base control.

1. Superposition: the tangent solver is linear in the control direction.
2. Taylor remainders of the control-to-state map and of the cost fall at
   second order, so the tangent really is the derivative.
3. Duality: the adjoint paired with the control direction reproduces the
   tangent's tracking derivative, to rounding.
4. Finite differences of the cost agree with the adjoint gradient.

    python3 demos/02_derivative_checks.py
"""

from scho.config import parse_config_text
from scho.workflows import (build_problem, duality_report, gradcheck_report, linearized_report,
                            taylor_report)

CONFIG = """
grid.nx = 32
grid.ny = 32
time.T = 0.05
time.nt = 50
init.u0 = disk
control.theta = vortex
targets.preset = constant
targets.u_value = 0.2
targets.v_value = 0.1
check.directions = 3
seed = 11
"""


def main():
    prob = build_problem(parse_config_text(CONFIG, "derivative-checks"))

    _, lin_err, state_order = linearized_report(prob)
    print(f"superposition error        {lin_err:.1e}")
    print(f"state-map Taylor order     {state_order:.3f}")

    rows, order = taylor_report(prob)
    print(f"cost Taylor order          {order:.3f}")
    for k, eps, rem, o in rows[:4]:
        print(f"    eps={eps:7.1e}  remainder={rem:.3e}  order={o:.3f}")

    _, gap = duality_report(prob)
    print(f"worst duality gap          {gap:.1e}")

    rows, worst = gradcheck_report(prob)
    print(f"worst gradient check error {worst:.1e}")
    for k, eps, fd, pred, rel in rows[:5]:
        print(f"    eps={eps:7.1e}  fd={fd:+.6e}  adjoint={pred:+.6e}  rel={rel:.1e}")


if __name__ == "__main__":
    main()
