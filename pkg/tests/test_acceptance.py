"""Acceptance gate: every published number and quantified invariant, one
pass/fail line per criterion.

Three sub-checks are implemented exactly as stated although the stated
targets are demonstrably unattainable (each test's docstring carries the
analysis; the README summarizes them under "Install and test"):

* the survey's published limit entry 0.53 for ``x^2 e^{-x^2/4}`` (the
  closed-form value is 0.5494, more than 0.015 away),
* the coherence Zeno ratio against the survival-probability variance
  (their true ratio is Var(H0+Ha)/2 : Var(Hhat) = 16 : 13),
* kernel/Fourier cross-agreement at n in {20, 40} on the coarse common grid
  (the kernel quadrature is outside its stability window there).

Those three tests fail; everything else passes.  Long n=800 checks are
opt-in via HALFLINE_DD_LONG_TESTS=1.
"""

import os
import time

import numpy as np
import pytest

from halfline_dd.analysis import (
    CONVERGENCE_CELLS,
    convergence_sweep,
    decay_profile,
    table1_sweep,
    zeno_coefficient,
)
from halfline_dd.ddengine import (
    DDParams,
    PropagatorCache,
    dd_evolve,
    dd_offdiagonal,
    dd_run,
    free_offdiagonal,
    predicted_limit,
    survival_amplitude,
    trotter_product,
)
from halfline_dd.grids import (
    Line,
    build_grid,
    cat_state,
    inner_product,
    normalize,
    odd_extend,
    sample,
    tail_mass,
)
from halfline_dd.propagators import Scheme, fourier_step_pair, shift_left, shift_right
from halfline_dd.wavexpr import parse_wave_expr

LONG_TESTS = os.environ.get("HALFLINE_DD_LONG_TESTS") == "1"


def report(criterion: str, ok: bool, detail: str):
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")


def halfline_cat(expr: str, dx: float, xmax: float):
    grid = build_grid(dx, xmax, Line.HALF)
    return cat_state(normalize(sample(parse_wave_expr(expr), grid)))


def fullline_cat(expr: str, dx: float = 0.01, xmax: float = 20.0):
    grid = build_grid(dx, xmax, Line.FULL)
    return cat_state(normalize(sample(parse_wave_expr(expr), grid, odd=True)))


@pytest.fixture(scope="module")
def cache():
    return PropagatorCache(max_entries=3)


@pytest.fixture(scope="module")
def table1(cache):
    return table1_sweep(cache=cache)


class TestSection3Sequence:
    """Slow convergence of |rho01^(n)(1)| for the reference configuration.

    The published to-converged sequence came from the exact-solution scheme;
    at the coarse survey grid (dx=0.01, xmax=20) that scheme's high powers
    diverge and the quadrature pair is band-limited, so the runs here use
    the kernel scheme inside its stability window (see the class docstring
    tolerances and the README).
    """

    def test_n200(self):
        t0 = time.time()
        state = halfline_cat("x^2*exp(-x)", 0.002, 6.5)
        params = DDParams(alpha=-2.0, t=1.0, n=200, scheme=Scheme.KERNEL,
                          grid=state.grid)
        value = abs(dd_offdiagonal(state, params, power="iterate"))
        ok = abs(value - 0.3066) <= 0.002
        report("s3-n200", ok,
               f"|rho01| = {value:.4f} vs 0.3066 +/- 0.002 "
               f"[{time.time() - t0:.0f}s]")
        assert ok

    def test_n400(self):
        t0 = time.time()
        state = halfline_cat("x^2*exp(-x)", 0.001, 6.5)
        params = DDParams(alpha=-2.0, t=1.0, n=400, scheme=Scheme.KERNEL,
                          grid=state.grid)
        value = abs(dd_offdiagonal(state, params, power="iterate"))
        ok = abs(value - 0.3090) <= 0.002
        report("s3-n400", ok,
               f"|rho01| = {value:.4f} vs 0.3090 +/- 0.002 "
               f"[{time.time() - t0:.0f}s]")
        assert ok

    @pytest.mark.skipif(not LONG_TESTS,
                        reason="optional long-run check; set HALFLINE_DD_LONG_TESTS=1")
    def test_n800_optional(self):
        state = halfline_cat("x^2*exp(-x)", 0.0005, 6.5)
        params = DDParams(alpha=-2.0, t=1.0, n=800, scheme=Scheme.KERNEL,
                          grid=state.grid)
        value = abs(dd_offdiagonal(state, params, power="iterate"))
        ok = abs(value - 0.3105) <= 0.002
        report("s3-n800", ok, f"|rho01| = {value:.4f} vs 0.3105 +/- 0.002")
        assert ok

    def test_predicted_limit_from_tail_mass(self):
        state = halfline_cat("x^2*exp(-x)", 0.0005, 30.0)
        pred = abs(predicted_limit(state, -2.0, 1.0))
        tail = tail_mass(state.psi0, 2.0)
        ok = abs(pred - 0.3144) <= 0.0005
        report("s3-limit", ok,
               f"|predicted| = {pred:.5f} (= tail/2 = {tail:.5f}/2) "
               f"vs 0.3144 +/- 0.0005")
        assert ok
        assert pred == pytest.approx(tail / 2.0, abs=1e-12)

    def test_monotone_from_below_with_gap(self):
        # non-decoupling invariant: values below the limit, increasing in n,
        # staying > 0.1 away from |rho01(0)| = 0.5
        state200 = halfline_cat("x^2*exp(-x)", 0.002, 6.5)
        v200 = abs(dd_offdiagonal(
            state200, DDParams(alpha=-2.0, t=1.0, n=200, scheme=Scheme.KERNEL,
                               grid=state200.grid), power="iterate"))
        state400 = halfline_cat("x^2*exp(-x)", 0.001, 6.5)
        v400 = abs(dd_offdiagonal(
            state400, DDParams(alpha=-2.0, t=1.0, n=400, scheme=Scheme.KERNEL,
                               grid=state400.grid), power="iterate"))
        limit = abs(predicted_limit(halfline_cat("x^2*exp(-x)", 0.0005, 30.0),
                                    -2.0, 1.0))
        ok = v200 < v400 < limit and (0.5 - v400) > 0.1 and (0.5 - v200) > 0.1
        report("s3-monotone", ok,
               f"0.5 - {v200:.4f} < {v400:.4f} < {limit:.4f} (gap > 0.1)")
        assert ok


class TestPositiveAlphaDecoupling:
    def test_n5_recovers_coherence(self, cache):
        state = fullline_cat("x^2*exp(-x)")
        params = DDParams(alpha=2.0, t=1.0, n=5, scheme=Scheme.FOURIER,
                          grid=state.grid)
        value = 2.0 * abs(dd_offdiagonal(state, params, power="iterate",
                                         cache=cache))
        ok = value > 0.999
        report("alpha-positive", ok, f"2|rho01| = {value:.6f} > 0.999")
        assert ok


class TestTable1:
    def test_dd_column(self, table1):
        devs = {r["expr"] + f" 2a={r['two_alpha']}":
                abs(r["computed_2rho01"] - r["published_2rho01"])
                for r in table1.rows}
        worst = max(devs, key=devs.get)
        ok = all(d <= 0.015 for d in devs.values())
        report("table1-dd", ok,
               f"8/8 rows within 0.015 of published (worst {worst}: "
               f"{devs[worst]:.4f})")
        assert ok

    def test_limit_column_excluding_row3(self, table1):
        rows = [r for i, r in enumerate(table1.rows) if i != 2]
        devs = [abs(r["predicted_2limit"] - r["published_limit"]) for r in rows]
        ok = all(d <= 0.015 for d in devs)
        report("table1-limit(7 rows)", ok,
               f"max deviation {max(devs):.4f} <= 0.015")
        assert ok

    def test_limit_column_row3_as_published(self, table1):
        """Expected FAIL: the published limit 0.53 for x^2 e^{-x^2/4} at
        cut 2 is itself off; the closed-form value is
        Gamma(5/2,2)/Gamma(5/2) = 0.549416 (adaptive quadrature agrees),
        0.0194 away; reproducing that entry to 0.015 is impossible."""
        row = table1.rows[2]
        dev = abs(row["predicted_2limit"] - row["published_limit"])
        ok = dev <= 0.015
        report("table1-limit(row3)", ok,
               f"computed {row['predicted_2limit']:.4f} vs published 0.53: "
               f"deviation {dev:.4f} (closed form 0.5494; published entry "
               f"imprecise)")
        assert ok


class TestConvergenceTable:
    def test_fine_dx_plateau(self):
        table = convergence_sweep(dx_list=(0.003,), xmax_list=(5.5, 6.0, 6.5))
        errs = [r["rel_err_percent"] for r in table.rows]
        ok = all(abs(e - 2.8) <= 0.5 for e in errs)
        report("convergence-plateau", ok,
               "errors " + ", ".join(f"{e:.2f}%" for e in errs) + " vs 2.8 +/- 0.5")
        assert ok

    def test_coarse_dx_divergence(self):
        table = convergence_sweep(dx_list=(0.006,), xmax_list=(5.5, 6.0, 6.5))
        flags = [r["divergent"] for r in table.rows]
        ok = all(flags)
        report("convergence-divergence", ok,
               f"dx=0.006, xmax>=5.5 cells divergent: {flags}")
        assert ok

    def test_cutoff_trend_matches_published_column(self):
        published = [99.9, 99.6, 48.3, 20.7, 9.6, 4.9, 3.3, 2.9, 2.8, 2.8, 2.8]
        table = convergence_sweep(dx_list=(0.003,),
                                  xmax_list=CONVERGENCE_CELLS["xmax"])
        errs = [r["rel_err_percent"] for r in table.rows]
        devs = [abs(e - p) for e, p in zip(errs, published)]
        monotone = all(a >= b - 1e-9 for a, b in zip(errs, errs[1:]))
        ok = all(d <= 1.0 for d in devs) and monotone
        report("convergence-trend", ok,
               f"max |computed - published| = {max(devs):.2f} points over "
               f"{len(errs)} cells; monotone decrease: {monotone}")
        assert ok


class TestTrotterLimits:
    def test_positive_alpha_error_decreasing(self):
        grid = build_grid(0.002, 5.5, Line.HALF)
        psi = normalize(sample(parse_wave_expr("x^2*exp(-x^2/5)"), grid))
        target = shift_right(psi, 1.0)
        errs = []
        for n in (10, 20, 40, 80):
            out = trotter_product(psi, 0.5, 2.0, n)
            errs.append(out.with_values(out.values - target.values).norm())
        ok = all(a > b for a, b in zip(errs, errs[1:]))
        report("trotter-right", ok,
               "||T_n - R psi|| = " + ", ".join(f"{e:.4f}" for e in errs)
               + " decreasing over n = 10, 20, 40, 80")
        assert ok

    def test_negative_alpha_norm_identity(self):
        grid = build_grid(0.002, 6.0, Line.HALF)
        psi = normalize(sample(parse_wave_expr("x^2*exp(-x)"), grid))
        target = shift_left(psi, 2.0)
        out = trotter_product(psi, -2.0, 1.0, 200)
        dist2 = out.with_values(out.values - target.values).norm2()
        residual = 1.0 - tail_mass(psi, 2.0)
        ok = abs(dist2 - residual) <= 0.02
        report("trotter-left", ok,
               f"||T_200 - L psi||^2 = {dist2:.4f} vs 1 - tail = "
               f"{residual:.4f} (diff {abs(dist2 - residual):.4f} <= 0.02)")
        assert ok


class TestZenoRegion:
    def test_loglog_slope(self):
        state = halfline_cat("x*exp(-x)", 0.002, 16.0)
        times = np.geomspace(1e-3, 1e-2, 7)
        prof = decay_profile(state, -2.0, times)
        slope = float(np.polyfit(np.log(times), np.log(1 - prof.values), 1)[0])
        ok = abs(slope - 2.0) <= 0.1
        report("zeno-slope", ok, f"log-log slope = {slope:.3f} vs 2.0 +/- 0.1")
        assert ok

    def test_survival_quadratic_consistency(self):
        # the coefficient the variance formula actually governs
        state = halfline_cat("x*exp(-x)", 0.001, 16.0)
        var = zeno_coefficient(state, -2.0)
        t = 5e-4
        p = abs(survival_amplitude(state, -2.0, t)) ** 2
        ratio = (1.0 - p) / (t**2 * var)
        ok = abs(ratio - 1.0) <= 0.05
        report("zeno-survival", ok,
               f"(1-|<Psi|e^-itH|Psi>|^2)/(t^2 Var) = {ratio:.4f} at t={t:g}")
        assert ok

    def test_coherence_ratio_as_stated(self):
        """Expected FAIL: 1 - |2 rho01(t)| decays with coefficient
        Var_psi(H0+Ha)/2 = 16, not zeno_coefficient = Var(Hhat) = 13, so the
        stated ratio converges to 16/13 = 1.23; the survival form of the
        same check (previous test) is the one the variance formula governs."""
        state = halfline_cat("x*exp(-x)", 0.001, 16.0)
        var = zeno_coefficient(state, -2.0)
        ratios = []
        for t in (1e-3, 5e-4):
            val = 1.0 - 2.0 * abs(free_offdiagonal(state, -2.0, t))
            ratios.append(val / (t**2 * var))
        ok = abs(ratios[-1] - 1.0) <= 0.05
        report("zeno-coherence-ratio", ok,
               f"(1-|2rho01|)/(t^2 zeno_coefficient) = "
               f"{ratios[0]:.3f}, {ratios[1]:.3f} at t = 1e-3, 5e-4; "
               f"limit 16/13 = 1.231")
        assert ok


class TestInvariantSuite:
    def test_scheme_agreement_in_stable_window(self, cache):
        devs = {}
        for n in (5, 10):
            sh = halfline_cat("x^2*exp(-x^2/5)", 0.01, 20.0)
            k = 2 * abs(dd_offdiagonal(sh, DDParams(
                alpha=-1.0, t=2.0, n=n, scheme=Scheme.KERNEL, grid=sh.grid),
                power="iterate"))
            sf = fullline_cat("x^2*exp(-x^2/5)")
            f = 2 * abs(dd_offdiagonal(sf, DDParams(
                alpha=-1.0, t=2.0, n=n, scheme=Scheme.FOURIER, grid=sf.grid),
                power="iterate", cache=cache))
            devs[n] = abs(k - f)
        ok = all(d < 5e-3 for d in devs.values())
        report("invariants-scheme-agreement(n<=10)", ok,
               "|kernel - fourier| = "
               + ", ".join(f"{d:.1e} (n={n})" for n, d in devs.items()))
        assert ok

    def test_scheme_agreement_n_le_40_as_stated(self, cache):
        """Expected FAIL: at dx=0.01, xmax=20 the kernel scheme leaves its
        stability window beyond n ~ 10 (t=2): the n=20 cells differ by
        7e-3 > 5e-3 and at n=40 the kernel high power diverges outright."""
        devs = {}
        for n in (5, 10, 20, 40):
            sh = halfline_cat("x^2*exp(-x^2/5)", 0.01, 20.0)
            with np.errstate(over="ignore", invalid="ignore"):
                k = 2 * abs(dd_offdiagonal(sh, DDParams(
                    alpha=-1.0, t=2.0, n=n, scheme=Scheme.KERNEL, grid=sh.grid),
                    power="iterate"))
            sf = fullline_cat("x^2*exp(-x^2/5)")
            f = 2 * abs(dd_offdiagonal(sf, DDParams(
                alpha=-1.0, t=2.0, n=n, scheme=Scheme.FOURIER, grid=sf.grid),
                power="iterate", cache=cache))
            devs[n] = abs(k - f)
        ok = all(d < 5e-3 for d in devs.values())
        report("invariants-scheme-agreement(n<=40)", ok,
               "|kernel - fourier| = "
               + ", ".join(f"{d:.1e} (n={n})" for n, d in devs.items())
               + " (kernel unstable at this grid beyond n ~ 10)")
        assert ok

    def test_positive_alpha_error_eventually_decreasing(self, cache):
        state = fullline_cat("x^2*exp(-x^2/5)")
        limit = abs(predicted_limit(state, 1.0, 1.0))
        diffs = []
        for n in (5, 10, 20, 40):
            params = DDParams(alpha=1.0, t=1.0, n=n, scheme=Scheme.FOURIER,
                              grid=state.grid)
            v = abs(dd_offdiagonal(state, params, power="iterate", cache=cache))
            diffs.append(abs(v - limit))
        ok = all(a > b for a, b in zip(diffs, diffs[1:]))
        report("invariants-alpha-positive-decreasing", ok,
               "|rho01 - limit| = "
               + ", ".join(f"{d:.1e}" for d in diffs)
               + " decreasing over n = 5, 10, 20, 40")
        assert ok

    def test_unitarity_drift_per_step(self, cache):
        sf = fullline_cat("x^2*exp(-x^2/5)")
        ua, u0 = fourier_step_pair(-1.0, 0.05, sf.grid,
                                   core=cache.fourier_core(0.05, sf.grid))
        drift_a = ua.norm_drift(sf.psi0)
        drift_0 = u0.norm_drift(sf.psi0)
        from halfline_dd.propagators import kernel_propagator
        sh = halfline_cat("x^2*exp(-x^2/5)", 0.002, 6.5)
        drift_k = kernel_propagator(-1.0, 0.005, sh.grid).norm_drift(sh.psi0)
        ok = drift_a < 1e-3 and drift_0 < 1e-3 and drift_k < 1e-3
        report("invariants-unitarity", ok,
               f"per-step drift: fourier ua {drift_a:.1e}, u0 {drift_0:.1e}, "
               f"kernel {drift_k:.1e} (< 1e-3)")
        assert ok

    def test_alpha_zero_identity_exact(self):
        state = halfline_cat("x^2*exp(-x)", 0.02, 10.0)
        params = DDParams(alpha=0.0, t=1.0, n=7, scheme=Scheme.KERNEL,
                          grid=state.grid)
        out0, out1 = dd_evolve(state, params)
        ok = (np.array_equal(out0.values, state.psi0.values)
              and np.array_equal(out1.values, state.psi1.values))
        report("invariants-alpha0", ok, "alpha = 0 returns inputs exactly")
        assert ok

    def test_w_isometry_and_shift_algebra(self):
        psi = normalize(sample(parse_wave_expr("x^2*exp(-x^2/5)"),
                               build_grid(0.01, 20.0, Line.HALF)))
        iso = abs(odd_extend(psi).norm() - psi.norm())
        lr = shift_left(shift_right(psi, 2.0), 2.0)
        lr_dev = float(np.max(np.abs(lr.values - psi.values)))
        rl = shift_right(shift_left(psi, 2.0), 2.0)
        k = round(2.0 / 0.01)
        rl_ok = (np.all(rl.values[:k] == 0.0)
                 and np.array_equal(rl.values[k:], psi.values[k:]))
        # L R = 1 exactly except for the state's own tail beyond xmax - s,
        # which R pushes off the grid (~1e-26 for this state)
        ok = iso < 1e-12 and lr_dev < 1e-25 and rl_ok
        report("invariants-w-shifts", ok,
               f"|  ||W psi|| - ||psi||  | = {iso:.1e}; L R = 1 (sup dev "
               f"{lr_dev:.1e}); R L = truncation: {rl_ok}")
        assert ok

    def test_diagonal_invariance_and_hermiticity(self):
        grid = build_grid(0.02, 6.0, Line.HALF)
        psi0 = normalize(sample(parse_wave_expr("x^2*exp(-x^2)"), grid))
        psi1 = normalize(sample(parse_wave_expr("x*exp(-x^2/2)"), grid))
        from halfline_dd.grids import QubitBathState
        state = QubitBathState(0.8, 0.6, psi0, psi1)
        params = DDParams(alpha=-1.0, t=1.0, n=10, scheme=Scheme.KERNEL,
                          grid=grid)
        out0, out1 = dd_evolve(state, params, power="iterate")
        diag_dev = max(abs(0.64 * out0.norm2() - 0.64),
                       abs(0.36 * out1.norm2() - 0.36))
        rho01 = np.conj(state.beta1) * state.beta0 * inner_product(out1, out0)
        rho10 = np.conj(state.beta0) * state.beta1 * inner_product(out0, out1)
        herm = abs(rho01 - np.conj(rho10))
        ok = diag_dev < 1e-3 and herm < 1e-10
        report("invariants-diag-herm", ok,
               f"diagonal drift {diag_dev:.1e}; |rho01 - conj(rho10)| = {herm:.1e}")
        assert ok


class TestFigure3:
    def test_overlap_and_oscillation_growth(self, cache):
        state = fullline_cat("x*exp(-x/5)")
        results = {}
        for n in (5, 20):
            params = DDParams(alpha=-1.0, t=2.0, n=n, scheme=Scheme.FOURIER,
                              grid=state.grid)
            results[n] = dd_run(state, params, power="iterate", cache=cache,
                                keep_wavefunctions=True)
        overlap = 2.0 * abs(results[20].rho01_n)
        ok_overlap = abs(overlap - 0.95) <= 0.02
        norms = results[20].norms
        ok_norms = all(abs(v - 1.0) < 0.05 for v in norms)

        def phase_tv(wf):
            dens = np.abs(wf.values) ** 2
            mask = dens > 1e-6 * dens.max()
            return float(np.sum(np.abs(np.diff(
                np.unwrap(np.angle(wf.values[mask]))))))

        tv5 = phase_tv(results[5].wavefunctions_out[1])
        tv20 = phase_tv(results[20].wavefunctions_out[1])
        ok = ok_overlap and ok_norms and tv20 > tv5
        report("figure3", ok,
               f"overlap = {overlap:.4f} vs 0.95 +/- 0.02; norms = "
               f"({norms[0]:.4f}, {norms[1]:.4f}); phase variation "
               f"{tv5:.0f} -> {tv20:.0f} (grows with n)")
        assert ok

    def test_consistent_with_table_row(self, table1, cache):
        row = table1.rows[6]   # x e^{-x/5}, 2 alpha = -2
        state = fullline_cat("x*exp(-x/5)")
        params = DDParams(alpha=-1.0, t=2.0, n=20, scheme=Scheme.FOURIER,
                          grid=state.grid)
        overlap = 2.0 * abs(dd_offdiagonal(state, params, power="iterate",
                                           cache=cache))
        ok = abs(overlap - row["computed_2rho01"]) < 1e-12
        report("figure3-table-row", ok,
               f"overlap equals the survey row value {row['computed_2rho01']:.4f}")
        assert ok
