import itertools

import numpy as np
import pytest

from siclab.analysis import (
    PreconditionError,
    count_sics,
    max_overlap_deviation,
    orbit_size,
    orbits_equivalent,
    phase_align,
    real_in_orbit,
    realness_check,
    stabilizer,
    state_inversion_check,
    tdesign_defect,
    triple_fingerprint,
    triple_products,
    verify_sic,
    zauner_class,
)
from siclab.clifford import (
    SymplecticIndex,
    canonical_key,
    clifford_element,
    group_orders,
    mat_det,
    named_symmetry,
    pair_mul,
    zauner_eigenspace,
)
from siclab.search import SearchConfig, restrict_to_symmetry, run_search
from siclab.whgroup import apply_displacement, make_context, orbit_vectors

from conftest import random_state

D2_SIC = np.array([np.sqrt((1 + 1 / np.sqrt(3)) / 2),
                   np.exp(1j * np.pi / 4) * np.sqrt((1 - 1 / np.sqrt(3)) / 2)])
D3_REAL = np.array([0, 1, -1], dtype=complex) / np.sqrt(2)


def converged(d, sub, restarts, seed):
    ctx = make_context(d)
    return [o.fiducial for o in run_search(ctx, SearchConfig(d, subspace=sub, restarts=restarts, seed=seed))
            if o.converged]


def random_density(rng, d, rank):
    A = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


# --- verification ------------------------------------------------------------------

def test_verify_examples():
    assert verify_sic(make_context(2), D2_SIC, 1e-10).passed
    rep = verify_sic(make_context(3), D3_REAL, 1e-12)
    assert rep.passed and rep.max_overlap_deviation < 1e-15
    rep = verify_sic(make_context(2), np.array([1, 0], dtype=complex))
    assert not rep.passed
    assert rep.max_overlap_deviation == pytest.approx(2 / 3)


def test_verify_report_fields(fiducial):
    rep = verify_sic(make_context(6), fiducial(6))
    assert rep.passed
    assert rep.cost_gap < 1e-14
    assert rep.design_defect_t1 < 1e-12 and rep.design_defect_t2 < 1e-10
    assert rep.inversion_error < 1e-10


def test_tdesign_examples(fiducial):
    basis = np.eye(2, dtype=complex)
    assert tdesign_defect(basis, 1) == pytest.approx(0, abs=1e-15)
    assert tdesign_defect(basis, 2) == pytest.approx(1 / 2 - 1 / 3)
    X = orbit_vectors(make_context(5), fiducial(5))
    assert abs(tdesign_defect(X, 2)) < 1e-10
    with pytest.raises(ValueError):
        tdesign_defect(np.zeros((0, 3)), 2)


def test_state_inversion(fiducial, rng):
    ctx = make_context(4)
    phi = fiducial(4)
    assert state_inversion_check(ctx, phi, np.eye(4) / 4) < 1e-12
    assert state_inversion_check(ctx, phi, np.outer(phi, phi.conj())) < 1e-9
    for _ in range(5):
        assert state_inversion_check(ctx, phi, random_density(rng, 4, 1)) < 1e-9
    with pytest.raises(PreconditionError):
        state_inversion_check(ctx, random_state(rng, 4), np.eye(4) / 4)


# --- stabilisers ----------------------------------------------------------------------

def brute_orbit(ctx, phi):
    """All projectors E|phi><phi|E^dag over PEC(d), by explicit enumeration over Z_dbar."""
    m = ctx.dbar
    seen = []
    for sign in (1, -1):
        for F in itertools.product(range(m), repeat=4):
            F = ((F[0], F[1]), (F[2], F[3]))
            if mat_det(F, m) != sign % m:
                continue
            for p in itertools.product(range(m), repeat=2):
                v = clifford_element(ctx, SymplecticIndex(F, p, m, sign)).apply(phi)
                if all(abs(np.vdot(w, v)) < 1 - 1e-9 for w in seen):
                    seen.append(v)
    return seen


def test_count_d2_by_enumeration(fiducial):
    ctx = make_context(2)
    phi = fiducial(2)
    orbit = brute_orbit(ctx, phi)
    st = stabilizer(ctx, phi)
    assert st.order == 6
    assert len(orbit) == group_orders(2)[1] // st.order == orbit_size(ctx, st)
    assert len(orbit) // 4 == count_sics(2, [6]) == 2


@pytest.mark.parametrize("d,expected", [(2, 6), (4, 6), (5, 3)])
def test_stabilizer_orders(d, expected, fiducial):
    ctx = make_context(d)
    phi = fiducial(d)
    st = stabilizer(ctx, phi)
    assert st.order == expected and st.strategy == "exhaustive"
    elems = st.elements(ctx)
    assert len(elems) == st.order
    keys = {canonical_key(ctx, g) for g in elems}
    for g in elems:
        assert abs(np.vdot(phi, clifford_element(ctx, g).apply(phi))) > 1 - 1e-9
        for h in elems:
            assert canonical_key(ctx, pair_mul(g, h)) in keys
    assert orbit_size(ctx, st) * st.order == group_orders(d)[1]


def test_stabilizer_targeted_finds_zauner(fiducial):
    ctx = make_context(5)
    st = stabilizer(ctx, fiducial(5), "targeted")
    assert st.order % 3 == 0


def test_stabilizer_rejects_bad_strategy(fiducial):
    with pytest.raises(ValueError):
        stabilizer(make_context(2), fiducial(2), "bogus")


def test_stabilizer_d7_orbit_b():
    ctx = make_context(7)
    sub = restrict_to_symmetry(ctx, named_symmetry(ctx, "fc"))
    sols = converged(7, sub, 60, 0)
    orders = {stabilizer(ctx, phi).order for phi in sols}
    assert 6 in orders
    phi = next(p for p in sols if stabilizer(ctx, p).order == 6)
    assert real_in_orbit(ctx, phi) is not None


@pytest.mark.slow
def test_stabilizer_d19_orbit_e():
    ctx = make_context(19)
    sub = restrict_to_symmetry(ctx, named_symmetry(ctx, "fc"))
    sols = converged(19, sub, 40, 3)
    assert 18 in {stabilizer(ctx, phi, "exhaustive").order for phi in sols}


def test_count_sics_examples():
    assert count_sics(15, [3, 3, 3, 6]) == 6720
    assert count_sics(2, [6]) == 2
    assert count_sics(4, [6]) == 16
    with pytest.raises(ValueError):
        count_sics(5, [7])


# --- Zauner classification ---------------------------------------------------------------

def test_zauner_class_d5(fiducial):
    ctx = make_context(5)
    for k in (0, 1):
        zc = zauner_class(ctx, fiducial(5, k))
        assert zc.stabilized and zc.k == k


def test_zauner_class_d8_orbit_b():
    ctx = make_context(8)
    sols = converged(8, zauner_eigenspace(ctx, 2), 10, 3)
    assert sols
    st = stabilizer(ctx, sols[0])
    assert st.order == 12
    zc = zauner_class(ctx, sols[0], st)
    assert zc.stabilized and zc.k == 2


def test_zauner_class_of_displaced_fiducial(fiducial):
    ctx = make_context(7)
    phi = apply_displacement(ctx, (2, 5), fiducial(7))
    zc = zauner_class(ctx, phi)
    assert zc.stabilized and zc.k == 0
    assert zc.vector is not None and verify_sic(ctx, zc.vector).passed


def test_zauner_class_rejects_non_sic(rng):
    with pytest.raises(PreconditionError):
        zauner_class(make_context(4), random_state(rng, 4))


# --- realness ------------------------------------------------------------------------------

def test_realness_examples(fiducial):
    ctx3 = make_context(3)
    assert realness_check(ctx3, D3_REAL)
    assert realness_check(ctx3, np.exp(1j * np.pi / 7) * D3_REAL)
    assert not realness_check(make_context(2), fiducial(2))
    assert real_in_orbit(make_context(2), fiducial(2)) is None


def test_no_real_sic_in_d2_phase_sweep(fiducial):
    phi = fiducial(2)
    theta = np.linspace(0, np.pi, 20001)
    imag = np.max(np.abs((np.exp(1j * theta)[:, None] * phi[None, :]).imag), axis=1)
    assert imag.min() > 0.1
    # and no real unit vector at all is a d=2 fiducial
    t = np.linspace(0, np.pi, 20001)
    devs = [max_overlap_deviation(make_context(2), np.array([np.cos(a), np.sin(a)], dtype=complex))
            for a in t]
    assert min(devs) > 0.1


def test_phase_align_real_vector():
    v = np.exp(0.3j) * D3_REAL
    assert np.max(np.abs(phase_align(v).imag)) < 1e-15


# --- fingerprints ----------------------------------------------------------------------------

def test_triple_products_examples(fiducial):
    ctx = make_context(2)
    C = triple_products(ctx, fiducial(2))
    assert C[0, 0] == pytest.approx(1)
    for b in range(1, 4):
        for c in range(1, 4):
            if b != c:
                assert abs(C[b, c]) == pytest.approx(3 ** -1.5, abs=1e-10)


@pytest.mark.parametrize("d", [4, 5, 6])
def test_fingerprint_invariance(d, fiducial):
    ctx = make_context(d)
    phi = fiducial(d)
    fp = triple_fingerprint(ctx, phi)
    rng = np.random.default_rng(d)
    for _ in range(5):
        while True:
            F = tuple(tuple(int(x) for x in r) for r in rng.integers(0, ctx.dbar, (2, 2)))
            if mat_det(F, ctx.dbar) == 1:
                break
        g = SymplecticIndex(F, tuple(int(x) for x in rng.integers(0, ctx.dbar, 2)), ctx.dbar)
        assert fp.distance(triple_fingerprint(ctx, clifford_element(ctx, g).apply(phi))) < 1e-8
    assert fp.conjugate().distance(triple_fingerprint(ctx, np.conj(phi))) < 1e-8
    assert fp.digest() == triple_fingerprint(ctx, apply_displacement(ctx, (1, 3), phi)).digest()


def test_orbits_equivalent_examples(fiducial):
    ctx = make_context(5)
    phi = fiducial(5)
    assert orbits_equivalent(ctx, phi, apply_displacement(ctx, (3, 1), phi)) == "same"
    assert orbits_equivalent(ctx, phi, np.conj(phi)) == "same"
    assert orbits_equivalent(ctx, phi, fiducial(5, 1)) == "same"


def test_orbits_equivalent_d9_two_orbits():
    ctx = make_context(9)
    sols = converged(9, zauner_eigenspace(ctx, 0), 40, 2)
    reps = []
    for phi in sols:
        if all(orbits_equivalent(ctx, r, phi) == "different" for r in reps):
            reps.append(phi)
    assert len(reps) == 2
    a, b = reps
    assert not triple_fingerprint(ctx, a).matches(triple_fingerprint(ctx, b))
    assert not triple_fingerprint(ctx, a).conjugate().matches(triple_fingerprint(ctx, b))


def test_orbits_equivalent_inconclusive_for_large_d(fiducial):
    ctx = make_context(11)
    phi = fiducial(11)
    assert orbits_equivalent(ctx, phi, apply_displacement(ctx, (1, 1), phi)) == "inconclusive"
