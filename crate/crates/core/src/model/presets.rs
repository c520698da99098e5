//! The two bundled schemes: the two-atom, two-mode qutrit scheme and its
//! N-level generalization.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{
    Atom, CavityCoupling, DecayChannel, LaserDrive, LevelScheme, MicrowaveCoupling, ModelError, Symbol, SymbolExpr,
    TargetTerm,
};

fn s(x: &str) -> String {
    x.to_string()
}

fn laser(atom: &str, excited: &str, ground: &str) -> LaserDrive {
    LaserDrive { atom: s(atom), excited: s(excited), ground: s(ground), amplitude: SymbolExpr::new(Symbol::Laser) }
}

fn microwave(atom: &str, to: &str, from: &str, sign: f64) -> MicrowaveCoupling {
    let amplitude = if sign < 0.0 { SymbolExpr::negated(Symbol::Microwave) } else { SymbolExpr::new(Symbol::Microwave) };
    MicrowaveCoupling { atom: s(atom), to: s(to), from: s(from), amplitude }
}

fn cavity(atom: &str, excited: &str, ground: &str, mode: &str) -> CavityCoupling {
    CavityCoupling { atom: s(atom), excited: s(excited), ground: s(ground), mode: s(mode), strength: SymbolExpr::new(Symbol::G) }
}

fn decay(atom: &str, excited: &str, ground: &str, denom: u32) -> DecayChannel {
    DecayChannel { atom: s(atom), excited: s(excited), ground: s(ground), rate: SymbolExpr::fraction(Symbol::Gamma, denom) }
}

fn term(a: &str, b: &str) -> TargetTerm {
    TargetTerm { weight: 1.0, levels: [s(a), s(b)] }
}

/// Two atoms in a bi-mode cavity.
///
/// Atom 1: `gL, gR, ga | e0`; atom 2: `gL, g0, gR | eL, eR`; modes `aL`,
/// `aR`. Target `(|gL gR> + |gR gL> + |ga g0>) / sqrt 3`.
pub fn paper_3d_scheme() -> LevelScheme {
    LevelScheme {
        name: s("paper-3d"),
        atoms: vec![
            Atom { label: s("atom1"), ground: vec![s("gL"), s("gR"), s("ga")], excited: vec![s("e0")] },
            Atom { label: s("atom2"), ground: vec![s("gL"), s("g0"), s("gR")], excited: vec![s("eL"), s("eR")] },
        ],
        cavity_modes: vec![s("aL"), s("aR")],
        laser_drives: vec![laser("atom1", "e0", "ga"), laser("atom2", "eL", "gL"), laser("atom2", "eR", "gR")],
        microwave_couplings: vec![
            microwave("atom1", "gL", "ga", 1.0),
            microwave("atom1", "gR", "ga", 1.0),
            microwave("atom2", "gL", "g0", -1.0),
            microwave("atom2", "gR", "g0", -1.0),
        ],
        cavity_couplings: vec![
            cavity("atom1", "e0", "gL", "aL"),
            cavity("atom2", "eR", "g0", "aL"),
            cavity("atom1", "e0", "gR", "aR"),
            cavity("atom2", "eL", "g0", "aR"),
        ],
        decay_channels: vec![
            decay("atom1", "e0", "gL", 3),
            decay("atom1", "e0", "ga", 3),
            decay("atom1", "e0", "gR", 3),
            decay("atom2", "eL", "gL", 2),
            decay("atom2", "eL", "g0", 2),
            decay("atom2", "eR", "gR", 2),
            decay("atom2", "eR", "g0", 2),
        ],
        target: vec![term("gL", "gR"), term("gR", "gL"), term("ga", "g0")],
    }
}

/// N-level generalization with `N - 1` cavity modes.
///
/// Atom 1: `ga, g1..g{N-1} | e0`, laser on `e0 <-> ga`, mode `a_i` couples
/// `e0 <-> g_i`, `e0` decays to every ground level with `gamma/N`.
/// Atom 2: `ga, g1..g{N-1} | e1..e{N-1}`, laser on `e_i <-> g_i`, mode
/// `a_i` couples `e_i <-> ga`, `e_i` decays to `g_i` and `ga` with
/// `gamma/2`. Microwaves drive `ga <-> g_i` with `+omega` on atom 1 and
/// `-omega` on atom 2. Target `(|ga ga> + sum_i |g_i g_i>) / sqrt N`.
pub fn ndim_scheme(n: usize) -> Result<LevelScheme, ModelError> {
    if n < 3 {
        return Err(ModelError::DimensionTooSmall(n));
    }
    let k = n - 1;
    let g = |i: usize| format!("g{i}");
    let e = |i: usize| format!("e{i}");
    let a = |i: usize| format!("a{i}");

    let grounds: Vec<String> = core::iter::once(s("ga")).chain((1..=k).map(g)).collect();
    let mut scheme = LevelScheme {
        name: format!("ndim-{n}"),
        atoms: vec![
            Atom { label: s("atom1"), ground: grounds.clone(), excited: vec![s("e0")] },
            Atom { label: s("atom2"), ground: grounds, excited: (1..=k).map(e).collect() },
        ],
        cavity_modes: (1..=k).map(a).collect(),
        laser_drives: vec![laser("atom1", "e0", "ga")],
        microwave_couplings: Vec::new(),
        cavity_couplings: Vec::new(),
        decay_channels: Vec::new(),
        target: vec![term("ga", "ga")],
    };
    for i in 1..=k {
        scheme.laser_drives.push(laser("atom2", &e(i), &g(i)));
        scheme.microwave_couplings.push(microwave("atom1", &g(i), "ga", 1.0));
        scheme.microwave_couplings.push(microwave("atom2", &g(i), "ga", -1.0));
        scheme.cavity_couplings.push(cavity("atom1", "e0", &g(i), &a(i)));
        scheme.cavity_couplings.push(cavity("atom2", &e(i), "ga", &a(i)));
        scheme.decay_channels.push(decay("atom2", &e(i), &g(i), 2));
        scheme.decay_channels.push(decay("atom2", &e(i), "ga", 2));
        scheme.target.push(term(&g(i), &g(i)));
    }
    for lvl in core::iter::once(s("ga")).chain((1..=k).map(g)) {
        scheme.decay_channels.push(decay("atom1", "e0", &lvl, n as u32));
    }
    Ok(scheme)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::build_space;
    use crate::linalg::vec_norm;
    use crate::model::{build_collapse_ops, build_hamiltonian, SimParams};

    #[test]
    fn three_d_decay_structure() {
        let sch = paper_3d_scheme();
        let from_e0: Vec<_> = sch.decay_channels.iter().filter(|d| d.excited == "e0").collect();
        assert_eq!(from_e0.len(), 3);
        assert!(from_e0.iter().all(|d| (d.rate.factor() - 1.0 / 3.0).abs() < 1e-16));
        let atom2: Vec<_> = sch.decay_channels.iter().filter(|d| d.atom == "atom2").collect();
        assert_eq!(atom2.len(), 4);
        assert!(atom2.iter().all(|d| d.rate.factor() == 0.5));
    }

    #[test]
    fn targets_are_normalized() {
        assert!((vec_norm(&paper_3d_scheme().target_vector()) - 1.0).abs() < 1e-15);
        let t4 = ndim_scheme(4).unwrap().target_vector();
        assert!((vec_norm(&t4) - 1.0).abs() < 1e-15);
        // 1/2 on |ga ga>, |g1 g1>, |g2 g2>, |g3 g3>.
        for (i, z) in t4.iter().enumerate() {
            let expect = if i % 5 == 0 { 0.5 } else { 0.0 };
            assert!((z.re - expect).abs() < 1e-15 && z.im == 0.0);
        }
    }

    #[test]
    fn ndim_requires_three() {
        assert_eq!(ndim_scheme(2), Err(ModelError::DimensionTooSmall(2)));
        for n in 3..7 {
            ndim_scheme(n).unwrap().validate().unwrap();
        }
    }

    /// Relabels an ndim(3) item into paper-3d labels.
    fn relabel(atom: &str, level: &str) -> String {
        let mapped = match (atom, level) {
            (_, "ga") if atom == "atom2" => "g0",
            ("atom1", "g1") => "gL",
            ("atom1", "g2") => "gR",
            ("atom2", "g1") => "gR",
            ("atom2", "g2") => "gL",
            ("atom2", "e1") => "eR",
            ("atom2", "e2") => "eL",
            ("", "a1") => "aL",
            ("", "a2") => "aR",
            (_, other) => other,
        };
        mapped.to_string()
    }

    fn sorted<T: Ord>(mut v: Vec<T>) -> Vec<T> {
        v.sort();
        v
    }

    #[test]
    fn ndim3_is_relabeled_3d_scheme() {
        let p3d = paper_3d_scheme();
        let n3 = ndim_scheme(3).unwrap();

        let lasers = |s: &LevelScheme, map: bool| {
            sorted(s.laser_drives.iter().map(|d| {
                let f = |l: &str| if map { relabel(&d.atom, l) } else { l.to_string() };
                (d.atom.clone(), f(&d.excited), f(&d.ground), alloc::format!("{}", d.amplitude))
            }).collect())
        };
        assert_eq!(lasers(&n3, true), lasers(&p3d, false));

        let mws = |s: &LevelScheme, map: bool| {
            sorted(s.microwave_couplings.iter().map(|d| {
                let f = |l: &str| if map { relabel(&d.atom, l) } else { l.to_string() };
                (d.atom.clone(), f(&d.to), f(&d.from), alloc::format!("{}", d.amplitude))
            }).collect())
        };
        assert_eq!(mws(&n3, true), mws(&p3d, false));

        let cav = |s: &LevelScheme, map: bool| {
            sorted(s.cavity_couplings.iter().map(|d| {
                let f = |l: &str| if map { relabel(&d.atom, l) } else { l.to_string() };
                let m = if map { relabel("", &d.mode) } else { d.mode.clone() };
                (d.atom.clone(), f(&d.excited), f(&d.ground), m, alloc::format!("{}", d.strength))
            }).collect())
        };
        assert_eq!(cav(&n3, true), cav(&p3d, false));

        let dec = |s: &LevelScheme, map: bool| {
            sorted(s.decay_channels.iter().map(|d| {
                let f = |l: &str| if map { relabel(&d.atom, l) } else { l.to_string() };
                (d.atom.clone(), f(&d.excited), f(&d.ground), alloc::format!("{}", d.rate))
            }).collect())
        };
        assert_eq!(dec(&n3, true), dec(&p3d, false));

        let tgt = |s: &LevelScheme, map: bool| {
            sorted(s.target.iter().map(|t| {
                if map {
                    (relabel("atom1", &t.levels[0]), relabel("atom2", &t.levels[1]))
                } else {
                    (t.levels[0].clone(), t.levels[1].clone())
                }
            }).collect())
        };
        assert_eq!(tgt(&n3, true), tgt(&p3d, false));
    }

    #[test]
    fn ndim3_spectrum_matches_3d_scheme() {
        let p = SimParams { rabi: 0.03, microwave: 0.012, ..SimParams::default() };
        let p3d = paper_3d_scheme();
        let n3 = ndim_scheme(3).unwrap();
        let (sp, sn) = (build_space(&p3d, 1).unwrap(), build_space(&n3, 1).unwrap());
        let ep = build_hamiltonian(&p, &p3d, &sp).unwrap().to_dense().hermitian_eigenvalues();
        let en = build_hamiltonian(&p, &n3, &sn).unwrap().to_dense().hermitian_eigenvalues();
        for (a, b) in ep.iter().zip(&en) {
            assert!((a - b).abs() < 1e-12);
        }
        // Dissipator spectra agree as well.
        let kp = crate::dynamics::decay_operator(&build_collapse_ops(&p, &p3d, &sp).unwrap()).unwrap();
        let kn = crate::dynamics::decay_operator(&build_collapse_ops(&p, &n3, &sn).unwrap()).unwrap();
        let (dp, dn) = (kp.to_dense().hermitian_eigenvalues(), kn.to_dense().hermitian_eigenvalues());
        for (a, b) in dp.iter().zip(&dn) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
