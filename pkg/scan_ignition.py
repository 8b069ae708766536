"""Scratch harness: hunt for a delay-velocity ignition boundary."""
import sys
import numpy as np
from nfield import (FieldModel, MexicanHat, ExponentialDecay, SeparableKernel, Logistic,
                    TransmissionDelay, gaussian_bump, symmetric_interval, make_time_grid,
                    SolverConfig, extend_solution)
from nfield.lab import delay_velocity_family, run_dependence_sweep


def make_model(A, th, kf, M, m, K, k, kt, v0, width, radius=2.0, npts=81):
    grid = symmetric_interval(radius, npts)
    return FieldModel(
        kernel=SeparableKernel(ExponentialDecay(rate=kt), MexicanHat(M=M, m=m, K=K, k=k)),
        rates=Logistic(steepness=kf, threshold=th),
        delay=TransmissionDelay(velocity=v0),
        prehistory=gaussian_bump(amplitude=A, width=width),
        grid=grid)


def sweep_d(params, gamma=1.0, dt=0.01):
    model = make_model(**params)
    cfg = SolverConfig(time_step=dt)
    fam = delay_velocity_family(model)
    rep = run_dependence_sweep(fam, gamma, cfg)
    return rep.distances(), rep


def peak_curve(params, vs, gamma=1.0, dt=0.01):
    out = []
    for v in vs:
        p = dict(params, v0=v)
        model = make_model(**p)
        cfg = SolverConfig(time_step=dt)
        tg = make_time_grid(0.0, gamma, dt)
        o = extend_solution(model.operator(tg), 0.0, gamma, cfg)
        out.append(float(np.max(o.trajectory().values[-1])))
    return out


if __name__ == "__main__":
    mode = sys.argv[1] if len(sys.argv) > 1 else "peaks"
    base = dict(A=0.30, th=0.5, kf=25.0, M=4.0, m=3.0, K=2.0, k=1.0,
                kt=4.0, v0=1.0, width=0.4)
    if mode == "peaks":
        vs = [1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6]
        for A in [float(x) for x in sys.argv[2:]] or [0.25, 0.3, 0.35]:
            p = dict(base, A=A)
            print(f"A={A}:", "  ".join(f"{x:.4f}" for x in peak_curve(p, vs)))
    else:
        d, rep = sweep_d(base)
        print("d:", ["%.3e" % x for x in d])
        print("ratio:", d[-1] / d[0])
