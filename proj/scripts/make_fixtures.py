#!/usr/bin/env python3
"""Regenerate the FCIDUMP fixtures under tests/data.

Requires PySCF. Each fixture is written as <name>.fcidump plus a <name>.meta
sidecar of `key = value` lines. Orbital symmetry labels are PySCF irrep ids
plus one, so that the product of two irreps is XOR of (label - 1).

Usage: python3 scripts/make_fixtures.py [--out tests/data] [--only NAME ...]
"""
import argparse
import math
import os

import numpy as np
from pyscf import ao2mo, fci, gto, mcscf, mp, scf, symm
from pyscf.tools import fcidump

TOL = 1e-14
FMT = " %.17g"


def water(r=0.9578, angle=104.4776):
    half = math.radians(angle) / 2
    y, z = r * math.sin(half), r * math.cos(half)
    return f"O 0 0 0; H 0 {y} {z}; H 0 {-y} {z}"


def ammonia(r=1.012, angle=106.67):
    # C3v pyramid from the H-N-H angle
    t = math.radians(angle)
    rho = r * math.sqrt((2 - 2 * math.cos(t)) / 3)
    h = math.sqrt(r * r - rho * rho)
    hs = [f"H {rho * math.cos(2 * math.pi * k / 3)} {rho * math.sin(2 * math.pi * k / 3)} {-h}" for k in range(3)]
    return "N 0 0 0; " + "; ".join(hs)


def borane(r=1.19):
    hs = [f"H {r * math.cos(2 * math.pi * k / 3)} {r * math.sin(2 * math.pi * k / 3)} 0" for k in range(3)]
    return "B 0 0 0; " + "; ".join(hs)


def methane(r=1.087):
    c = r / math.sqrt(3)
    return f"C 0 0 0; H {c} {c} {c}; H {-c} {-c} {c}; H {-c} {c} {-c}; H {c} {-c} {-c}"


def nitroxyl(r_no=1.2090, r_nh=1.0630, angle=108.58):
    t = math.radians(angle)
    return f"N 0 0 0; O 0 0 {r_no}; H {r_nh * math.sin(t)} 0 {r_nh * math.cos(t)}"


def beh2(r):
    return f"Be 0 0 0; H 0 0 {r}; H 0 0 {-r}"


# name: (geometry, basis, point group used for labels, frozen core orbitals, run FCI)
FIXTURES = {
    "h2_sto3g": ("H 0 0 0; H 0 0 0.7414", "sto-3g", "D2h", 0, True),
    "lih_sto3g": ("Li 0 0 0; H 0 0 1.5949", "sto-3g", "C2v", 1, True),
    "beh2_sto3g": (beh2(1.3264), "sto-3g", "D2h", 1, True),
    "bh3_sto3g": (borane(), "sto-3g", "C2v", 1, True),
    "ch4_sto3g": (methane(), "sto-3g", "D2", 1, True),
    "nh3_sto3g": (ammonia(), "sto-3g", "Cs", 1, True),
    "h2o_sto3g": (water(), "sto-3g", "C2v", 1, True),
    "hf_sto3g": ("F 0 0 0; H 0 0 0.9168", "sto-3g", "C2v", 1, True),
    "c2_sto3g": ("C 0 0 0; C 0 0 1.2425", "sto-3g", "D2h", 2, True),
    "n2_sto3g": ("N 0 0 0; N 0 0 1.0977", "sto-3g", "D2h", 2, True),
    "hno_sto3g": (nitroxyl(), "sto-3g", "Cs", 2, True),
    "lih_631g": ("Li 0 0 0; H 0 0 1.5949", "6-31g", "C2v", 1, True),
    "beh2_631g": (beh2(1.3264), "6-31g", "D2h", 1, True),
    "c2_ccpvdz": ("C 0 0 0; C 0 0 1.2425", "cc-pvdz", "D2h", 2, False),
    "beh2_ccpvdz_r1.00": (beh2(1.00), "cc-pvdz", "D2h", 1, True),
    "beh2_ccpvdz_r1.33": (beh2(1.3264), "cc-pvdz", "D2h", 1, True),
    "beh2_ccpvdz_r2.00": (beh2(2.00), "cc-pvdz", "D2h", 1, True),
}


def build(name, geom, basis, group, ncore, do_fci, out):
    mol = gto.M(atom=geom, basis=basis, symmetry=group, verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    assert mf.converged, name
    nmo = mol.nao - ncore
    nelec = mol.nelectron - 2 * ncore
    irreps = symm.label_orb_symm(mol, mol.irrep_id, mol.symm_orb, mf.mo_coeff)
    active = np.asarray(irreps[ncore:], dtype=int)
    assert active.max() < 8, name

    cas = mcscf.CASCI(mf, nmo, nelec)
    h1, ecore = cas.get_h1eff()
    h2 = ao2mo.restore(1, cas.get_h2eff(), nmo)

    path = os.path.join(out, name + ".fcidump")
    fcidump.from_integrals(path, h1, h2, nmo, nelec, nuc=ecore, ms=0,
                           orbsym=[int(x) + 1 for x in active], tol=TOL, float_format=FMT)

    # Reference values are computed from the integrals exactly as written.
    ctx = fcidump.read(path, verbose=False)
    h1r, h2r, er = ctx["H1"], ao2mo.restore(1, ctx["H2"], nmo), ctx["ECORE"]
    pt = mp.MP2(mf, frozen=ncore) if ncore else mp.MP2(mf)
    pt.kernel()

    meta = {
        "name": name,
        "geometry": geom,
        "basis": basis,
        "point_group": group,
        "frozen_core": ncore,
        "norb": nmo,
        "nelec": nelec,
        "e_scf": f"{mf.e_tot:.15f}",
        "e_mp2": f"{pt.e_tot:.15f}",
        "orbital_energies": ",".join(f"{e:.15f}" for e in mf.mo_energy[ncore:]),
    }
    if do_fci:
        solver = fci.direct_spin1.FCI()
        solver.conv_tol = 1e-13
        solver.max_cycle = 400
        orbsym = active
        solver = fci.direct_spin1_symm.FCI()
        solver.conv_tol = 1e-13
        solver.max_cycle = 400
        solver.wfnsym = 0
        e, _ = solver.kernel(h1r, h2r, nmo, nelec, ecore=er, orbsym=orbsym)
        meta["e_fci"] = f"{e:.15f}"
    with open(os.path.join(out, name + ".meta"), "w") as f:
        for k, v in meta.items():
            f.write(f"{k} = {v}\n")
    print(name, meta.get("e_fci"), (mf.e_tot - float(meta.get("e_fci", "nan"))) * 1e3)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "tests", "data"))
    ap.add_argument("--only", nargs="*")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for name, spec in FIXTURES.items():
        if args.only and name not in args.only:
            continue
        build(name, *spec, args.out)


if __name__ == "__main__":
    main()
