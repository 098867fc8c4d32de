//! Entanglement measures on multi-qubit density matrices.
//!
//! Qubit indices are 0-based here; reports print them 1-based.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::blocks::qubit_bit;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Eigenvalues above `−NOISE_FLOOR` are not counted as negative.
pub const NOISE_FLOOR: f64 = 1e-12;

fn qubits_of(rho: &CMat) -> Result<usize> {
    let d = rho.nrows();
    if d != rho.ncols() || d == 0 || !d.is_power_of_two() {
        return Err(Error::Domain(format!("{}×{} is not a multi-qubit density matrix", d, rho.ncols())));
    }
    Ok(d.trailing_zeros() as usize)
}

fn mask_of(n: usize, set: &[usize]) -> usize {
    set.iter().fold(0, |m, &q| m | qubit_bit(n, q))
}

/// Reduced state on `keep`; the kept qubits appear in ascending order.
pub fn partial_trace(rho: &CMat, keep: &[usize]) -> Result<CMat> {
    let n = qubits_of(rho)?;
    let keep: Vec<usize> = keep.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if keep.is_empty() {
        return Err(Error::Domain("partial trace needs at least one kept qubit".into()));
    }
    if keep.iter().any(|&q| q >= n) {
        return Err(Error::Domain(format!("qubit index out of range for {n} qubits")));
    }
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let k = keep.len();
    let expand = |bits: usize, set: &[usize]| -> usize {
        set.iter().enumerate().fold(0, |acc, (pos, &q)| {
            if bits & (1 << (set.len() - 1 - pos)) != 0 {
                acc | qubit_bit(n, q)
            } else {
                acc
            }
        })
    };
    let kept_idx: Vec<usize> = (0..1usize << k).map(|r| expand(r, &keep)).collect();
    let traced_idx: Vec<usize> = (0..1usize << traced.len()).map(|t| expand(t, &traced)).collect();
    Ok(CMat::from_fn(1 << k, 1 << k, |r, c| {
        traced_idx.iter().map(|&t| rho[(kept_idx[r] | t, kept_idx[c] | t)]).sum()
    }))
}

/// Split of the register into `A` and its complement.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bipartition {
    qubits: usize,
    a: Vec<usize>,
}

impl Bipartition {
    /// Canonical form: `|A| ≤ |B|`, ties broken by the lexicographically
    /// smaller side.
    pub fn new(qubits: usize, a: &[usize]) -> Result<Self> {
        let set: BTreeSet<usize> = a.iter().copied().collect();
        if set.is_empty() || set.len() >= qubits || set.iter().any(|&q| q >= qubits) {
            return Err(Error::Domain(format!("invalid bipartition {a:?} of {qubits} qubits")));
        }
        let a: Vec<usize> = set.into_iter().collect();
        let b: Vec<usize> = (0..qubits).filter(|q| !a.contains(q)).collect();
        let a = if a.len() < b.len() || (a.len() == b.len() && a < b) { a } else { b };
        Ok(Bipartition { qubits, a })
    }

    pub fn a(&self) -> &[usize] {
        &self.a
    }

    pub fn b(&self) -> Vec<usize> {
        (0..self.qubits).filter(|q| !self.a.contains(q)).collect()
    }

    /// Every distinct bipartition of `qubits` qubits.
    pub fn all(qubits: usize) -> Vec<Bipartition> {
        let mut set = BTreeSet::new();
        for mask in 1..(1usize << qubits) - 1 {
            let a: Vec<usize> = (0..qubits).filter(|q| mask & (1 << q) != 0).collect();
            set.insert(Bipartition::new(qubits, &a).expect("proper subset"));
        }
        let mut v: Vec<_> = set.into_iter().collect();
        v.sort_by(|x, y| x.a.len().cmp(&y.a.len()).then_with(|| x.a.cmp(&y.a)));
        v
    }
}

fn join(set: &[usize]) -> String {
    set.iter().map(|q| (q + 1).to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", join(&self.a), join(&self.b()))
    }
}

/// `⟨i_A j_B|ρ^{T_A}|k_A l_B⟩ = ⟨k_A j_B|ρ|i_A l_B⟩`.
pub fn partial_transpose(rho: &CMat, part: &Bipartition) -> Result<CMat> {
    let n = qubits_of(rho)?;
    if n != part.qubits {
        return Err(Error::Domain("bipartition and state disagree on qubit count".into()));
    }
    let m = mask_of(n, &part.a);
    Ok(CMat::from_fn(rho.nrows(), rho.ncols(), |i, j| {
        rho[((i & !m) | (j & m), (j & !m) | (i & m))]
    }))
}

/// `−2 Σ` negative eigenvalues of the partial transpose (1 for a Bell pair).
pub fn negativity(rho: &CMat, part: &Bipartition) -> Result<f64> {
    let pt = linalg::hermitian_part(&partial_transpose(rho, part)?);
    let eig = linalg::herm_eigenvalues(&pt)?;
    Ok(-2.0 * eig.iter().filter(|&&x| x < -NOISE_FLOOR).sum::<f64>())
}

/// Two-qubit negativity between qubits `i` and `j` after tracing out the rest.
pub fn pair_negativity(rho: &CMat, i: usize, j: usize) -> Result<f64> {
    let r = partial_trace(rho, &[i, j])?;
    negativity(&r, &Bipartition::new(2, &[0])?)
}

/// Wootters concurrence of a two-qubit state.
pub fn concurrence(rho: &CMat) -> Result<f64> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(Error::Domain(format!("concurrence needs a 4×4 state, got {}×{}", rho.nrows(), rho.ncols())));
    }
    // With ρ = W W†, the λ's are the singular values of τ = Wᵀ(σ_y⊗σ_y)W.
    // Working with W avoids square roots of round-off eigenvalues, which
    // would cost half the digits on pure states.
    let (vals, v) = linalg::herm_eigen(&linalg::hermitian_part(rho))?;
    let top = vals.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..4).filter(|&k| vals[k] > 1e-14 * top).collect();
    if keep.is_empty() {
        return Ok(0.0);
    }
    let w = CMat::from_fn(4, keep.len(), |i, c| v[(i, keep[c])] * vals[keep[c]].sqrt());
    // σ_y ⊗ σ_y reverses the basis with signs (−, +, +, −)
    let sign = [-1.0, 1.0, 1.0, -1.0];
    let yw = CMat::from_fn(4, keep.len(), |i, c| w[(3 - i, c)] * sign[i]);
    let tau = w.transpose() * &yw;
    let mut lam = linalg::singular_values(&tau)?;
    lam.resize(4, 0.0);
    lam.sort_by(|a, b| b.total_cmp(a));
    Ok((lam[0] - lam[1] - lam[2] - lam[3]).max(0.0))
}

pub fn pair_concurrence(rho: &CMat, i: usize, j: usize) -> Result<f64> {
    concurrence(&partial_trace(rho, &[i, j])?)
}

/// Geometric mean of the three one-versus-two negativities.
pub fn tripartite_negativity(rho: &CMat) -> Result<f64> {
    if qubits_of(rho)? != 3 {
        return Err(Error::Domain("tripartite negativity needs three qubits".into()));
    }
    let mut prod = 1.0;
    for q in 0..3 {
        let n = negativity(rho, &Bipartition::new(3, &[q])?)?;
        if n == 0.0 {
            return Ok(0.0);
        }
        prod *= n;
    }
    Ok(prod.cbrt())
}

/// Declared point-group symmetry of the emitter arrangement, used to report
/// one representative per equivalence class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    #[default]
    None,
    /// Regular polygon with qubits numbered around the ring.
    Dihedral,
    /// Reflection `q ↦ N − 1 − q`.
    Mirror,
}

impl Symmetry {
    /// All qubit permutations of the group.
    pub fn permutations(self, n: usize) -> Vec<Vec<usize>> {
        let id: Vec<usize> = (0..n).collect();
        match self {
            Symmetry::None => vec![id],
            Symmetry::Mirror => vec![id, (0..n).map(|q| n - 1 - q).collect()],
            Symmetry::Dihedral => {
                let mut g = Vec::with_capacity(2 * n);
                for r in 0..n {
                    g.push((0..n).map(|q| (q + r) % n).collect());
                    g.push((0..n).map(|q| (r + n - q) % n).collect());
                }
                g
            }
        }
    }
}

fn orbit_representative<T: Ord + Clone>(group: &[Vec<usize>], image: impl Fn(&[usize]) -> T) -> T {
    group.iter().map(|p| image(p)).min().expect("group contains the identity")
}

/// Pairs `(i, j)`, `i < j`, one per symmetry class.
pub fn pair_classes(n: usize, symmetry: Symmetry) -> Vec<(usize, usize)> {
    let group = symmetry.permutations(n);
    let mut reps = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            reps.insert(orbit_representative(&group, |p| {
                let (a, b) = (p[i], p[j]);
                (a.min(b), a.max(b))
            }));
        }
    }
    reps.into_iter().collect()
}

/// Bipartitions, one per symmetry class.
pub fn bipartition_classes(n: usize, symmetry: Symmetry) -> Vec<Bipartition> {
    let group = symmetry.permutations(n);
    let mut reps = BTreeSet::new();
    for b in Bipartition::all(n) {
        let rep = orbit_representative(&group, |p| {
            let img: Vec<usize> = b.a.iter().map(|&q| p[q]).collect();
            let c = Bipartition::new(n, &img).expect("image of a bipartition");
            (c.a.len(), c.a.clone())
        });
        reps.insert(rep);
    }
    reps.into_iter().map(|(_, a)| Bipartition::new(n, &a).expect("representative")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    PairNegativity,
    Concurrence,
    BipartitionNegativity,
    TripartiteNegativity,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 4] = [
        MeasureKind::PairNegativity,
        MeasureKind::Concurrence,
        MeasureKind::BipartitionNegativity,
        MeasureKind::TripartiteNegativity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::PairNegativity => "pair-negativity",
            MeasureKind::Concurrence => "concurrence",
            MeasureKind::BipartitionNegativity => "bipartition-negativity",
            MeasureKind::TripartiteNegativity => "tripartite-negativity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        MeasureKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureRow {
    pub kind: MeasureKind,
    /// `"1-2"` for pairs, `"1/2,3"` for bipartitions, `"1,2,3"` for the
    /// tripartite measure.
    pub index_set: String,
    pub value: f64,
}

/// Evaluates the requested measures, one row per symmetry class.
pub fn measure_suite(rho: &CMat, kinds: &[MeasureKind], symmetry: Symmetry) -> Result<Vec<MeasureRow>> {
    let n = qubits_of(rho)?;
    let mut rows = Vec::new();
    let want = |k| kinds.contains(&k);
    if n >= 2 && (want(MeasureKind::PairNegativity) || want(MeasureKind::Concurrence)) {
        for (i, j) in pair_classes(n, symmetry) {
            let reduced = partial_trace(rho, &[i, j])?;
            let label = format!("{}-{}", i + 1, j + 1);
            if want(MeasureKind::PairNegativity) {
                let v = negativity(&reduced, &Bipartition::new(2, &[0])?)?;
                rows.push(MeasureRow { kind: MeasureKind::PairNegativity, index_set: label.clone(), value: v });
            }
            if want(MeasureKind::Concurrence) {
                rows.push(MeasureRow { kind: MeasureKind::Concurrence, index_set: label, value: concurrence(&reduced)? });
            }
        }
    }
    if n >= 2 && want(MeasureKind::BipartitionNegativity) {
        for b in bipartition_classes(n, symmetry) {
            rows.push(MeasureRow {
                kind: MeasureKind::BipartitionNegativity,
                index_set: b.to_string(),
                value: negativity(rho, &b)?,
            });
        }
    }
    if n == 3 && want(MeasureKind::TripartiteNegativity) {
        rows.push(MeasureRow {
            kind: MeasureKind::TripartiteNegativity,
            index_set: "1,2,3".into(),
            value: tripartite_negativity(rho)?,
        });
    }
    Ok(rows)
}
