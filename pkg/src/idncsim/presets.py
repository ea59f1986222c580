"""Named experiment presets: completion-time sweeps, distortion sweeps and a trace-driven run."""
from __future__ import annotations

from importlib import resources

from .errors import ConfigError
from .experiment import P1_POLICIES, P2_POLICIES, ExperimentSpec
from .montecarlo import run_monte_carlo

SWEEP_N = (2, 4, 6, 8, 10)
SWEEP_M = (4, 6, 8, 10, 12)
DEFAULT_TRIALS = 200


def bundled_trace():
    return str(resources.files("idncsim") / "data" / "sample_trace.csv")


def _fig2(**kw):
    return ExperimentSpec(objective="P1", policies=P1_POLICIES, **kw)


def _fig3(**kw):
    kw.setdefault("constraints", (3,))
    return ExperimentSpec(objective="P2", policies=P2_POLICIES, **kw)


PRESETS = {
    # completion time under D_cons = 0.2 * total importance
    "fig2a": lambda: _fig2(name="fig2a", n_values=SWEEP_N, m_values=(10,), constraints=(0.2,)),
    "fig2b": lambda: _fig2(name="fig2b", n_values=(10,), m_values=SWEEP_M, constraints=(0.2,)),
    "fig2c": lambda: _fig2(name="fig2c", n_values=(10,), m_values=(10,), constraints=(0.0, 0.2, 0.4)),
    # sqrt(sum D_n^2) under a 3-round deadline
    "fig3a": lambda: _fig3(name="fig3a", n_values=SWEEP_N, m_values=(10,)),
    "fig3b": lambda: _fig3(name="fig3b", n_values=(10,), m_values=SWEEP_M),
    "fig3c": lambda: _fig3(name="fig3c", n_values=(10,), m_values=(10,), constraints=(1, 2, 3, 4, 5)),
    "table1-style": lambda: _fig3(name="table1-style", n_values=(10,), m_values=(10,),
                                  importance="trace", trace_path=bundled_trace(), block_size=10,
                                  stage1_loss=(0.3, 0.4), d2d_loss=(0.0, 0.5)),
}


def preset_spec(name, **overrides):
    try:
        spec = PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    overrides = {k: v for k, v in overrides.items() if v is not None}
    overrides.setdefault("trials", DEFAULT_TRIALS)
    return spec.replace(**overrides)


def run_preset(name, seed=0, trials=None, out=None, workers=1, **overrides):
    """Run a preset and write its CSV when ``out`` is given; returns the result."""
    spec = preset_spec(name, seed=seed, trials=trials, out=out, **overrides)
    result = run_monte_carlo(spec, workers=workers)
    if spec.out:
        result.write(spec.out)
    return result


def gnuplot_script(result, csv_path):
    """Script that redraws the mean metric with error bars per policy."""
    spec = result.spec
    if len(spec.n_values) > 1:
        xcol, xlabel = 3, "number of devices N"
    elif len(spec.m_values) > 1:
        xcol, xlabel = 4, "number of packets M"
    else:
        xcol, xlabel = 5, "constraint"
    metric = spec.metric_names[0]
    lines = [
        "set datafile separator ','",
        f"set title '{spec.name}'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{metric}'",
        "set key top left",
    ]
    plots = [
        f"'{csv_path}' using (strcol(2) eq '{pol}' && strcol(6) eq '{metric}' ? ${xcol} : 1/0):7:8 "
        f"with yerrorlines title '{pol}'"
        for pol in spec.policies
    ]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"
