//! Hand-derived closed forms for the bundled two-mode qutrit scheme.
//!
//! Ground basis `(gL, gR, ga) (x) (gL, g0, gR)`; excited-manifold vectors
//! are indexed by position in [`ManifoldPartition::excited`] of the
//! `n_max = 1` space.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::hilbert::{build_space, SpaceRef};
use crate::linalg::{re, sqrt, CMatrix, C64, ONE, ZERO};
use crate::model::presets::paper_3d_scheme;
use crate::model::{CollapseChannel, LevelScheme, SimParams};

use super::{ground_operator, ground_space, partition_manifolds, EffectiveError, EffectiveModel, ManifoldMatrix, ManifoldPartition};

const GROUND1: [&str; 3] = ["gL", "gR", "ga"];
const GROUND2: [&str; 3] = ["gL", "g0", "gR"];

/// Which atom's spontaneous emission a channel belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayFamily {
    /// `e0` of atom 1, branching `gamma/3`.
    Atom1,
    /// `eL`, `eR` of atom 2, branching `gamma/2`.
    Atom2,
}

/// Named superpositions used by the closed forms.
#[derive(Debug, Clone)]
pub struct NamedStates {
    pub space: SpaceRef,
    pub partition: ManifoldPartition,
    pub x1: Vec<C64>,
    pub x2: Vec<C64>,
    pub x3: Vec<C64>,
    pub plus: Vec<C64>,
    pub minus: Vec<C64>,
    /// Target `(|gL gR> + |gR gL> + |ga g0>) / sqrt 3`.
    pub t1: Vec<C64>,
    pub t2: Vec<C64>,
    pub t3: Vec<C64>,
}

struct Basis {
    scheme: LevelScheme,
    space: SpaceRef,
    part: ManifoldPartition,
}

impl Basis {
    fn new() -> Self {
        let scheme = paper_3d_scheme();
        let space = build_space(&scheme, 1).expect("bundled scheme is valid");
        let part = partition_manifolds(&scheme, &space).expect("bundled scheme is valid");
        Self { scheme, space, part }
    }

    /// Excited-manifold unit vector for `|a1 a2> |nL nR>`.
    fn e(&self, a1: &str, a2: &str, nl: usize, nr: usize) -> Vec<C64> {
        let m = [
            self.scheme.atoms[0].level_index(a1).expect("atom 1 level"),
            self.scheme.atoms[1].level_index(a2).expect("atom 2 level"),
            nl,
            nr,
        ];
        let pos = self.part.excited_position(self.space.flat_index(&m)).expect("state in excited manifold");
        let mut v = vec![ZERO; self.part.excited.len()];
        v[pos] = ONE;
        v
    }
}

/// Ground unit vector `|a b>`.
fn q(a: &str, b: &str) -> Vec<C64> {
    let i = GROUND1.iter().position(|x| *x == a).expect("atom 1 ground level");
    let j = GROUND2.iter().position(|x| *x == b).expect("atom 2 ground level");
    let mut v = vec![ZERO; 9];
    v[i * 3 + j] = ONE;
    v
}

fn lin(terms: &[(f64, &[C64])]) -> Vec<C64> {
    let mut out = vec![ZERO; terms[0].1.len()];
    for (w, v) in terms {
        for (o, x) in out.iter_mut().zip(*v) {
            *o += x * *w;
        }
    }
    out
}

fn outer(a: &[C64], b: &[C64]) -> CMatrix {
    CMatrix::outer(a, b)
}

/// `|a><b| + |b><a|` with the same coefficient on both terms.
fn sym(a: &[C64], b: &[C64]) -> CMatrix {
    &outer(a, b) + &outer(b, a)
}

struct Coeffs {
    g2: f64,
    d: f64,
    dp: C64,
    /// `9 g^2 Delta' - 3 delta Delta'^2`.
    d9: C64,
    /// `g^2 - delta Delta'`, `2 g^2 - delta Delta'`, `3 g^2 - delta Delta'`.
    c1: C64,
    c2: C64,
    c3: C64,
    c11: C64,
    c12: C64,
    c22: C64,
}

impl Coeffs {
    fn new(p: &SimParams) -> Self {
        let (g2, d, dp) = (p.g * p.g, p.delta(), p.delta_prime());
        let d9 = dp * (9.0 * g2) - dp * dp * (3.0 * d);
        let c1 = re(g2) - dp * d;
        let c2 = re(2.0 * g2) - dp * d;
        let c3 = re(3.0 * g2) - dp * d;
        Self {
            g2,
            d,
            dp,
            d9,
            c1,
            c2,
            c3,
            c11: (re(g2) - dp * (3.0 * d)) / d9,
            c12: re(2.0 * sqrt(2.0) * g2) / d9,
            c22: (re(8.0) / dp - re(d) / c3) / 9.0,
        }
    }
}

pub fn named_states() -> NamedStates {
    let b = Basis::new();
    let (s2, s3, s6) = (1.0 / sqrt(2.0), 1.0 / sqrt(3.0), 1.0 / sqrt(6.0));
    let (ler, rel, e0) = (b.e("gL", "eR", 0, 0), b.e("gR", "eL", 0, 0), b.e("e0", "g0", 0, 0));
    let (pl, pr) = (b.e("gL", "g0", 1, 0), b.e("gR", "g0", 0, 1));
    let (lr, rl, a0) = (q("gL", "gR"), q("gR", "gL"), q("ga", "g0"));
    NamedStates {
        x1: lin(&[(s3, &ler), (s3, &rel), (s3, &e0)]),
        x2: lin(&[(s6, &ler), (s6, &rel), (-2.0 * s6, &e0)]),
        x3: lin(&[(s2, &ler), (-s2, &rel)]),
        plus: lin(&[(s2, &pl), (s2, &pr)]),
        minus: lin(&[(s2, &pl), (-s2, &pr)]),
        t1: lin(&[(s3, &lr), (s3, &rl), (s3, &a0)]),
        t2: lin(&[(s6, &lr), (s6, &rl), (-2.0 * s6, &a0)]),
        t3: lin(&[(s2, &lr), (-s2, &rl)]),
        space: b.space,
        partition: b.part,
    }
}

fn require_paper_3d(scheme: &LevelScheme) -> Result<(), EffectiveError> {
    if *scheme == paper_3d_scheme() {
        Ok(())
    } else {
        Err(EffectiveError::UnsupportedScheme)
    }
}

/// Closed-form `H_NH^-1` on the excited manifold of the `n_max = 1` space,
/// as three blocks: the `{X1, X2, X3, +, -}` sector, the `e0`/two-photon
/// sector and the atom-2 sector. Off-diagonal terms are complex symmetric.
pub fn hnh_inverse_closed_form(params: &SimParams, scheme: &LevelScheme) -> Result<ManifoldMatrix, EffectiveError> {
    params.validate()?;
    require_paper_3d(scheme)?;
    let k = Coeffs::new(params);
    let g = params.g;
    let b = Basis::new();
    let n = named_states();
    let s3 = sqrt(3.0);

    let mut m = &(&(&outer(&n.x1, &n.x1).scale(k.c11) + &outer(&n.x2, &n.x2).scale(k.c22))
        - &(&outer(&n.x3, &n.x3).scale(re(k.d)) + &outer(&n.minus, &n.minus).scale(k.dp)).scale(ONE / k.c1))
        - &outer(&n.plus, &n.plus).scale(k.dp / k.c3);
    m = &m + &sym(&n.x2, &n.x1).scale(k.c12);
    m = &m + &sym(&n.plus, &n.x1).scale(re(2.0 * sqrt(2.0) * g / s3) / k.c3);
    m = &m - &sym(&n.plus, &n.x2).scale(re(g / s3) / k.c3);
    m = &m + &sym(&n.minus, &n.x3).scale(re(g) / k.c1);

    // e0 with one photon on atom 2's g_L / g_R.
    let (e0l, e0r) = (b.e("e0", "gL", 0, 0), b.e("e0", "gR", 0, 0));
    let ph = [b.e("gL", "gL", 1, 0), b.e("gR", "gL", 0, 1), b.e("gL", "gR", 1, 0), b.e("gR", "gR", 0, 1)];
    let two = re(2.0 * k.g2 * k.d) - k.dp * (k.d * k.d);
    m = &m - &(&outer(&e0l, &e0l) + &outer(&e0r, &e0r)).scale(re(k.d) / k.c2);
    let diag = re(1.0 / k.d) - re(k.g2) / two;
    for p in &ph {
        m = &m + &outer(p, p).scale(diag);
    }
    m = &m + &(&sym(&lin(&[(1.0, &ph[0]), (1.0, &ph[1])]), &e0l) + &sym(&lin(&[(1.0, &ph[2]), (1.0, &ph[3])]), &e0r)).scale(re(g) / k.c2);
    m = &m - &(&sym(&ph[1], &ph[0]) + &sym(&ph[3], &ph[2])).scale(re(k.g2) / two);

    // Atom 2 excited with atom 1 in a ground level, and the matching photon states.
    let ex = [b.e("ga", "eL", 0, 0), b.e("ga", "eR", 0, 0), b.e("gL", "eL", 0, 0), b.e("gR", "eR", 0, 0)];
    let pp = [b.e("ga", "g0", 0, 1), b.e("ga", "g0", 1, 0), b.e("gL", "g0", 0, 1), b.e("gR", "g0", 1, 0)];
    for (e, p) in ex.iter().zip(&pp) {
        m = &m - &outer(e, e).scale(re(k.d) / k.c1);
        m = &m - &outer(p, p).scale(k.dp / k.c1);
        m = &m + &sym(p, e).scale(re(g) / k.c1);
    }
    Ok(ManifoldMatrix { indices: b.part.excited, matrix: m })
}

/// Correct `<T2|` coefficient inside the braces of an effective emission operator.
pub fn t2_coefficient(params: &SimParams, family: DecayFamily) -> C64 {
    let k = Coeffs::new(params);
    let s3 = sqrt(3.0);
    match family {
        DecayFamily::Atom1 => (k.c12 - k.c22 * sqrt(2.0)) / s3,
        DecayFamily::Atom2 => (k.c12 + k.c22 / sqrt(2.0)) / s3,
    }
}

/// A competing closed form for the `<T2|` coefficient. It does
/// not equal `L H_NH^-1 V+` and is kept only for comparison.
pub fn alternate_t2_coefficient(params: &SimParams, family: DecayFamily) -> C64 {
    let k = Coeffs::new(params);
    let sign = match family {
        DecayFamily::Atom1 => -1.0,
        DecayFamily::Atom2 => 1.0,
    };
    let inner = re(2.0 * k.g2) / k.d9 + (re(8.0 / 9.0) / k.dp - re(k.d) / k.c3) * sign;
    inner * (sqrt(2.0) / 3.0)
}

fn t1_coefficient(k: &Coeffs, family: DecayFamily) -> C64 {
    let s3 = sqrt(3.0);
    match family {
        DecayFamily::Atom1 => (k.c11 - re(4.0 * k.g2) / k.d9) / s3,
        DecayFamily::Atom2 => (k.c11 + re(2.0 * k.g2) / k.d9) / s3,
    }
}

fn channel(label: &str, m: CMatrix, space: &SpaceRef) -> Result<CollapseChannel, EffectiveError> {
    Ok(CollapseChannel { label: label.to_string(), operator: ground_operator(space, &m)? })
}

/// Closed-form `H_g` on the ground manifold: `+omega` on atom 1, `-omega` on atom 2.
fn ground_microwaves(omega: f64) -> CMatrix {
    let mut hg = CMatrix::zeros(9, 9);
    for b in GROUND2 {
        for a in ["gL", "gR"] {
            hg = &hg + &sym(&q(a, b), &q("ga", b)).scale(re(omega));
        }
    }
    for a in GROUND1 {
        for b in ["gL", "gR"] {
            hg = &hg - &sym(&q(a, b), &q(a, "g0")).scale(re(omega));
        }
    }
    hg
}

/// Closed-form effective Hamiltonian and the seven emission channels at
/// `kappa = 0`, in the channel order of the scheme's decay list. The two
/// atom-2 decays into `g0` are kept separate.
pub fn closed_form_effective(params: &SimParams, scheme: &LevelScheme) -> Result<EffectiveModel, EffectiveError> {
    params.validate()?;
    require_paper_3d(scheme)?;
    let k = Coeffs::new(params);
    let n = named_states();
    let om2 = params.rabi * params.rabi;
    let d = k.d;

    let mut h = (&outer(&q("ga", "gL"), &q("ga", "gL")) + &outer(&q("ga", "gR"), &q("ga", "gR")))
        .scale(re(om2 * (re(d) / k.c1 + re(d) / k.c2).re));
    h = &h + &(&(&outer(&q("gL", "gL"), &q("gL", "gL")) + &outer(&q("gR", "gR"), &q("gR", "gR"))) + &outer(&n.t3, &n.t3))
        .scale(re(om2 * (re(d) / k.c1).re));
    h = &h - &outer(&n.t1, &n.t1).scale(re(om2 * k.c11.re));
    h = &h - &(&outer(&n.t1, &n.t2) + &outer(&n.t2, &n.t1)).scale(re(om2 * k.c12.re));
    h = &h - &outer(&n.t2, &n.t2).scale(re(om2 * k.c22.re));
    h = &h + &ground_microwaves(params.microwave);

    let space = ground_space(scheme)?;
    let sg = sqrt(params.gamma);
    let pre1 = re(params.rabi * sg / sqrt(3.0));
    let pre2 = re(params.rabi * sg / sqrt(2.0));
    let (t1a, t2a) = (t1_coefficient(&k, DecayFamily::Atom1), t2_coefficient(params, DecayFamily::Atom1));
    let (t1b, t2b) = (t1_coefficient(&k, DecayFamily::Atom2), t2_coefficient(params, DecayFamily::Atom2));
    let bra = |out: &[C64], a: C64, b: C64| &outer(out, &n.t1).scale(a) + &outer(out, &n.t2).scale(b);

    let mut lindblads = Vec::with_capacity(7);
    for x in ["gL", "ga", "gR"] {
        let pump = &outer(&q(x, "gL"), &q("ga", "gL")) + &outer(&q(x, "gR"), &q("ga", "gR"));
        let m = (&bra(&q(x, "g0"), t1a, t2a) - &pump.scale(re(d) / k.c2)).scale(pre1);
        lindblads.push(channel(&format!("atom1:e0->{x}"), m, &space)?);
    }
    let s2 = 1.0 / sqrt(2.0);
    // (decay, kept atom-1 level, atom-2 output, source atom-2 level, sign on <T3|)
    let atom2 = [("eL->gL", "gR", "gL", "gL", -1.0), ("eL->g0", "gR", "g0", "gL", -1.0), ("eR->gR", "gL", "gR", "gR", 1.0), ("eR->g0", "gL", "g0", "gR", 1.0)];
    for (label, a1, out, src, sign) in atom2 {
        let ket = q(a1, out);
        let rest = &(&outer(&q("ga", out), &q("ga", src)) + &outer(&q(src, out), &q(src, src))) + &outer(&ket, &n.t3).scale(re(sign * s2));
        let m = (&bra(&ket, t1b, t2b) - &rest.scale(re(d) / k.c1)).scale(pre2);
        lindblads.push(channel(&format!("atom2:{label}"), m, &space)?);
    }
    Ok(EffectiveModel {
        labels: scheme.ground_labels(),
        hamiltonian: ground_operator(&space, &h)?,
        space,
        lindblads,
        condition_number: None,
    })
}

/// The three channels that survive for `delta = g^2/Delta`, `Delta >> gamma`:
/// atom-2 decay into `gL`, into `gR`, and into `g0` (both branches merged),
/// with prefactor `sqrt(gamma/2) g_eff / (delta gamma / (2 Delta))`.
pub fn dominant_lindblads(params: &SimParams) -> Result<Vec<CollapseChannel>, EffectiveError> {
    params.validate()?;
    let expected = params.g * params.g / params.detuning;
    if (params.delta() - expected).abs() > 1e-12 * expected.abs() {
        return Err(EffectiveError::NotDominantRegime { delta: params.delta(), expected });
    }
    let n = named_states();
    let space = ground_space(&paper_3d_scheme())?;
    let pre = re(sqrt(params.gamma / 2.0) * params.g_eff() / (params.delta() * params.gamma / (2.0 * params.detuning)));
    let (s3, s6) = (sqrt(3.0), sqrt(6.0));

    let mut out = Vec::with_capacity(3);
    for (label, x, sign) in [("atom2:eL->gL", "gL", 1.0), ("atom2:eR->gR", "gR", -1.0)] {
        let ket = lin(&[(0.5, &n.t3), (-sign / s6, &n.t1), (-sign / (2.0 * s3), &n.t2)]);
        let m = &(&outer(&ket, &n.t3) + &outer(&q(x, x), &q(x, x))) + &outer(&q("ga", x), &q("ga", x));
        out.push(channel(label, m.scale(pre), &space)?);
    }
    let a0 = q("ga", "g0");
    let gsum = lin(&[(1.0, &q("ga", "gL")), (1.0, &q("ga", "gR"))]);
    let diff = lin(&[(1.0, &q("gR", "g0")), (-1.0, &q("gL", "g0"))]);
    let m = &(&(&outer(&a0, &gsum) + &outer(&q("gL", "g0"), &q("gL", "gL"))) + &outer(&q("gR", "g0"), &q("gR", "gR")))
        - &outer(&diff, &n.t3).scale(re(1.0 / sqrt(2.0)));
    out.push(channel("atom2:e->g0", m.scale(pre), &space)?);
    Ok(out)
}
