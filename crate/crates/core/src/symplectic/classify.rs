use super::{check_symplectic, HamiltonMatrix, SymplecticError, Tolerances};
use crate::linalg::{eigenvalues, singular_values, to_complex, CMat, Mat};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifyMode {
    /// input is a linearized Poincaré map `S`; eigenvalues `μ`
    PoincareMap,
    /// input is a Hamilton matrix `B`; eigenvalues `λ`
    HamiltonMatrix,
}

/// One Jordan chain (or one elliptic pair). `lambda` is the Hamilton-matrix
/// exponent and `multiplier` the map eigenvalue `μ = e^λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EigenGroup {
    RealHyperbolic {
        lambda: f64,
        chain_size: usize,
        multiplier: f64,
    },
    ComplexHyperbolic {
        lambda_re: f64,
        lambda_im: f64,
        chain_size: usize,
        multiplier_re: f64,
        multiplier_im: f64,
    },
    Elliptic {
        theta: f64,
        multiplier_re: f64,
        multiplier_im: f64,
    },
}

impl EigenGroup {
    pub fn lambda(&self) -> Complex64 {
        match *self {
            EigenGroup::RealHyperbolic { lambda, .. } => Complex64::new(lambda, 0.0),
            EigenGroup::ComplexHyperbolic { lambda_re, lambda_im, .. } => Complex64::new(lambda_re, lambda_im),
            EigenGroup::Elliptic { theta, .. } => Complex64::new(0.0, theta),
        }
    }

    pub fn multiplier(&self) -> Complex64 {
        match *self {
            EigenGroup::RealHyperbolic { multiplier, .. } => Complex64::new(multiplier, 0.0),
            EigenGroup::ComplexHyperbolic { multiplier_re, multiplier_im, .. }
            | EigenGroup::Elliptic { multiplier_re, multiplier_im, .. } => Complex64::new(multiplier_re, multiplier_im),
        }
    }

    pub fn chain_size(&self) -> usize {
        match *self {
            EigenGroup::RealHyperbolic { chain_size, .. } | EigenGroup::ComplexHyperbolic { chain_size, .. } => chain_size,
            EigenGroup::Elliptic { .. } => 1,
        }
    }

    /// Real dimension accounted for by this group.
    pub fn dimension(&self) -> usize {
        match self {
            EigenGroup::RealHyperbolic { chain_size, .. } => 2 * chain_size,
            EigenGroup::ComplexHyperbolic { chain_size, .. } => 4 * chain_size,
            EigenGroup::Elliptic { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumClassification {
    pub mode: ClassifyMode,
    pub dim: usize,
    pub groups: Vec<EigenGroup>,
    pub n_hc: usize,
    pub n_hr: usize,
    pub n_elliptic: usize,
    pub is_loxodromic: bool,
    pub has_negative_real: bool,
}

impl SpectrumClassification {
    /// All `λ` with multiplicity, over the full `±λ, ±λ̄` orbits.
    pub fn exponent_multiset(&self) -> Vec<Complex64> {
        let mut out = Vec::new();
        for g in &self.groups {
            let l = g.lambda();
            let k = g.chain_size();
            match g {
                EigenGroup::RealHyperbolic { .. } => {
                    out.extend(std::iter::repeat_n(l, k));
                    out.extend(std::iter::repeat_n(-l, k));
                }
                EigenGroup::ComplexHyperbolic { .. } => {
                    for z in [l, l.conj(), -l, -l.conj()] {
                        out.extend(std::iter::repeat_n(z, k));
                    }
                }
                EigenGroup::Elliptic { .. } => {
                    out.push(l);
                    out.push(l.conj());
                }
            }
        }
        out
    }
}

/// A representative eigenvalue cluster with its Jordan chain sizes,
/// descending.
#[derive(Debug, Clone)]
pub(crate) struct RepCluster {
    pub value: Complex64,
    pub chains: Vec<usize>,
}

struct Cluster {
    value: Complex64,
    size: usize,
}

fn distance(mode: ClassifyMode, a: Complex64, b: Complex64, scale: f64) -> f64 {
    match mode {
        ClassifyMode::HamiltonMatrix => (a - b).norm() / scale,
        ClassifyMode::PoincareMap => (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE),
    }
}

/// Single-linkage clusters of nearby eigenvalues; returns means.
fn cluster(eigs: &[Complex64], mode: ClassifyMode, scale: f64, radius: f64) -> Vec<Cluster> {
    let n = eigs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut c = i;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if distance(mode, eigs[i], eigs[j], scale) <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut sums: std::collections::BTreeMap<usize, (Complex64, usize)> = Default::default();
    for (i, &e) in eigs.iter().enumerate() {
        let r = find(&mut parent, i);
        let entry = sums.entry(r).or_insert((Complex64::new(0.0, 0.0), 0));
        entry.0 += e;
        entry.1 += 1;
    }
    sums.into_values().map(|(s, c)| Cluster { value: s / c as f64, size: c }).collect()
}

fn complex_pow(m: &CMat, p: usize) -> CMat {
    let mut out = m.clone();
    for _ in 1..p {
        out = &out * m;
    }
    out
}

/// Nullities of `(M - v I)^j` up to the cluster size, turned into chain
/// lengths (descending).
pub(crate) fn chain_sizes(m: &Mat, value: Complex64, size: usize, rank_tol: f64) -> Result<Vec<usize>, SymplecticError> {
    let n = m.nrows();
    let mut shifted = to_complex(m);
    for i in 0..n {
        shifted[(i, i)] -= value;
    }
    let mut nullity = vec![0usize];
    for j in 1..=size {
        let pw = complex_pow(&shifted, j);
        let sv = singular_values(&pw);
        let top = sv.max();
        let d = sv.iter().filter(|&&s| s <= rank_tol * top.max(f64::MIN_POSITIVE)).count();
        nullity.push(d);
        if d >= size {
            break;
        }
    }
    let last = *nullity.last().unwrap_or(&0);
    if last != size {
        return Err(SymplecticError::DefectiveBeyondTolerance(format!(
            "generalized eigenspace at {value} has dimension {last} by rank tests, cluster has {size}"
        )));
    }
    // at_least[j] = number of chains of length > j
    let at_least: Vec<usize> = nullity.windows(2).map(|w| w[1].saturating_sub(w[0])).collect();
    if at_least.windows(2).any(|w| w[1] > w[0]) {
        return Err(SymplecticError::DefectiveBeyondTolerance(format!(
            "inconsistent nullity sequence {nullity:?} at {value}"
        )));
    }
    let mut chains = Vec::new();
    for (j, &c) in at_least.iter().enumerate() {
        let next = at_least.get(j + 1).copied().unwrap_or(0);
        chains.extend(std::iter::repeat_n(j + 1, c - next));
    }
    chains.sort_unstable_by(|a, b| b.cmp(a));
    Ok(chains)
}

fn principal_log(mu: Complex64) -> Complex64 {
    if mu.im == 0.0 && mu.re < 0.0 {
        Complex64::new((-mu.re).ln(), std::f64::consts::PI)
    } else {
        mu.ln()
    }
}

/// Groups and representative clusters. Shared with the normal-form
/// construction.
pub(crate) fn analyze(
    m: &Mat,
    mode: ClassifyMode,
    tol: &Tolerances,
) -> Result<(SpectrumClassification, Vec<RepCluster>), SymplecticError> {
    let n = m.nrows();
    match mode {
        ClassifyMode::PoincareMap => check_symplectic(m, tol.symplectic_tol)?,
        ClassifyMode::HamiltonMatrix => {
            HamiltonMatrix::with_tolerance(m.clone(), tol.hamiltonian_tol)?;
        }
    }
    let eigs = eigenvalues(m);
    let scale = eigs.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let clusters = cluster(&eigs, mode, scale, tol.cluster_tol);

    let on_axis = |v: Complex64| match mode {
        ClassifyMode::HamiltonMatrix => v.re.abs() <= tol.unit_tol * scale,
        ClassifyMode::PoincareMap => (v.norm() - 1.0).abs() <= tol.unit_tol,
    };
    let is_real = |v: Complex64| match mode {
        ClassifyMode::HamiltonMatrix => v.im.abs() <= tol.unit_tol * scale,
        ClassifyMode::PoincareMap => v.im.abs() <= tol.unit_tol * v.norm(),
    };
    let partners = |v: Complex64| -> Vec<Complex64> {
        match mode {
            ClassifyMode::HamiltonMatrix => vec![-v, v.conj()],
            ClassifyMode::PoincareMap => vec![1.0 / v, v.conj()],
        }
    };
    for c in &clusters {
        for p in partners(c.value) {
            let ok = clusters
                .iter()
                .any(|d| d.size == c.size && distance(mode, d.value, p, scale) <= tol.unit_tol);
            if !ok {
                return Err(SymplecticError::GroupingFailed(format!(
                    "eigenvalue cluster at {} (multiplicity {}) has no partner near {}",
                    c.value, c.size, p
                )));
            }
        }
    }

    let mut groups = Vec::new();
    let mut reps = Vec::new();
    let mut has_negative_real = false;
    for c in &clusters {
        let v = if is_real(c.value) { Complex64::new(c.value.re, 0.0) } else { c.value };
        let lambda = match mode {
            ClassifyMode::HamiltonMatrix => v,
            ClassifyMode::PoincareMap => principal_log(v),
        };
        let multiplier = match mode {
            ClassifyMode::HamiltonMatrix => v.exp(),
            ClassifyMode::PoincareMap => v,
        };
        let negative = match mode {
            ClassifyMode::PoincareMap => is_real(v) && v.re < 0.0,
            ClassifyMode::HamiltonMatrix => {
                let k = (v.im / std::f64::consts::PI).round();
                k as i64 % 2 != 0 && (v.im - k * std::f64::consts::PI).abs() <= tol.unit_tol * scale
            }
        };
        has_negative_real |= negative;
        if on_axis(v) {
            if v.im < -tol.unit_tol * scale.max(1.0) {
                continue;
            }
            let pairs = if is_real(v) { c.size / 2 } else { c.size };
            let theta = match mode {
                ClassifyMode::HamiltonMatrix => v.im.max(0.0),
                ClassifyMode::PoincareMap => v.arg().abs(),
            };
            for _ in 0..pairs {
                groups.push(EigenGroup::Elliptic { theta, multiplier_re: multiplier.re, multiplier_im: multiplier.im.abs() });
            }
            continue;
        }
        let expanding = match mode {
            ClassifyMode::HamiltonMatrix => v.re > 0.0,
            ClassifyMode::PoincareMap => v.norm() > 1.0,
        };
        if !expanding || (!is_real(v) && v.im < 0.0) {
            continue;
        }
        let chains = chain_sizes(m, v, c.size, tol.rank_tol)?;
        for &k in &chains {
            if is_real(v) {
                groups.push(EigenGroup::RealHyperbolic { lambda: lambda.re, chain_size: k, multiplier: multiplier.re });
            } else {
                groups.push(EigenGroup::ComplexHyperbolic {
                    lambda_re: lambda.re,
                    lambda_im: lambda.im,
                    chain_size: k,
                    multiplier_re: multiplier.re,
                    multiplier_im: multiplier.im,
                });
            }
        }
        reps.push(RepCluster { value: v, chains });
    }
    let accounted: usize = groups.iter().map(|g| g.dimension()).sum();
    if accounted != n {
        return Err(SymplecticError::GroupingFailed(format!("groups account for {accounted} of {n} dimensions")));
    }
    let n_hc = groups.iter().filter(|g| matches!(g, EigenGroup::ComplexHyperbolic { .. })).count();
    let n_hr = groups.iter().filter(|g| matches!(g, EigenGroup::RealHyperbolic { .. })).count();
    let n_elliptic = groups.iter().filter(|g| matches!(g, EigenGroup::Elliptic { .. })).count();
    Ok((
        SpectrumClassification {
            mode,
            dim: n,
            groups,
            n_hc,
            n_hr,
            n_elliptic,
            is_loxodromic: n_elliptic == 0,
            has_negative_real,
        },
        reps,
    ))
}

/// Groups the spectrum of a symplectic map or Hamilton matrix into real
/// hyperbolic pairs, complex hyperbolic quadruples and elliptic pairs.
pub fn classify(m: &Mat, mode: ClassifyMode, tol: &Tolerances) -> Result<SpectrumClassification, SymplecticError> {
    analyze(m, mode, tol).map(|(c, _)| c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm;
    use crate::symplectic::random::{conjugated_normal_form, random_chains, random_hamiltonian};
    use crate::symplectic::ChainBlock;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn diagonal_hyperbolic_map() {
        let s = Mat::from_diagonal(&crate::linalg::Vector::from_vec(vec![E, 1.0 / E]));
        let c = classify(&s, ClassifyMode::PoincareMap, &tol()).unwrap();
        assert_eq!(c.groups.len(), 1);
        match c.groups[0] {
            EigenGroup::RealHyperbolic { lambda, chain_size, multiplier } => {
                assert!((lambda - 1.0).abs() < 1e-14);
                assert_eq!(chain_size, 1);
                assert!((multiplier - E).abs() < 1e-14);
            }
            ref g => panic!("unexpected group {g:?}"),
        }
        assert!(c.is_loxodromic && !c.has_negative_real);
        assert_eq!((c.n_hr, c.n_hc), (1, 0));
    }

    #[test]
    fn rotation_is_elliptic() {
        let (c, s) = (0.3_f64.cos(), 0.3_f64.sin());
        let r = Mat::from_row_slice(2, 2, &[c, -s, s, c]);
        let cl = classify(&r, ClassifyMode::PoincareMap, &tol()).unwrap();
        assert!(!cl.is_loxodromic);
        match cl.groups[0] {
            EigenGroup::Elliptic { theta, .. } => assert!((theta - 0.3).abs() < 1e-14),
            ref g => panic!("unexpected group {g:?}"),
        }
    }

    #[test]
    fn negative_real_map_flagged() {
        let s = Mat::from_diagonal(&crate::linalg::Vector::from_vec(vec![-E * E, -1.0 / (E * E)]));
        let c = classify(&s, ClassifyMode::PoincareMap, &tol()).unwrap();
        assert!(c.is_loxodromic);
        assert!(c.has_negative_real);
        assert!((c.groups[0].lambda().re - 2.0).abs() < 1e-14);
    }

    #[test]
    fn non_symplectic_rejected() {
        let s = Mat::from_diagonal(&crate::linalg::Vector::from_vec(vec![2.0, 2.0]));
        assert!(matches!(classify(&s, ClassifyMode::PoincareMap, &tol()), Err(SymplecticError::NotSymplectic(_))));
    }

    #[test]
    fn jordan_chain_sizes_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let chains = vec![
            ChainBlock { lambda: Complex64::new(0.5, 0.0), size: 3 },
            ChainBlock { lambda: Complex64::new(0.9, 0.7), size: 2 },
        ];
        let (b, _) = conjugated_normal_form(&mut rng, &chains, 0.3);
        let c = classify(&b, ClassifyMode::HamiltonMatrix, &tol()).unwrap();
        let mut sizes: Vec<(bool, usize)> = c
            .groups
            .iter()
            .map(|g| (matches!(g, EigenGroup::ComplexHyperbolic { .. }), g.chain_size()))
            .collect();
        sizes.sort();
        assert_eq!(sizes, vec![(false, 3), (true, 2)]);
    }

    #[test]
    fn serde_tags() {
        let g = EigenGroup::RealHyperbolic { lambda: 1.0, chain_size: 1, multiplier: E };
        assert!(serde_json::to_string(&g).unwrap().contains(r#""type":"real_hyperbolic""#));
        let g = EigenGroup::Elliptic { theta: 0.1, multiplier_re: 1.0, multiplier_im: 0.0 };
        assert!(serde_json::to_string(&g).unwrap().contains(r#""type":"elliptic""#));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn map_and_matrix_modes_agree(seed in any::<u64>(), m in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let chains: Vec<ChainBlock> = random_chains(&mut rng, m, 1);
            let (b, _) = conjugated_normal_form(&mut rng, &chains, 0.2);
            let by_matrix = classify(&b, ClassifyMode::HamiltonMatrix, &tol()).unwrap();
            let by_map = classify(&expm(&b), ClassifyMode::PoincareMap, &tol()).unwrap();
            prop_assert_eq!(by_matrix.groups.len(), by_map.groups.len());
            for g in &by_matrix.groups {
                let mu = g.lambda().exp();
                let best = by_map
                    .groups
                    .iter()
                    .map(|h| (h.multiplier() - mu).norm() / mu.norm())
                    .fold(f64::INFINITY, f64::min);
                prop_assert!(best <= 1e-8, "multiplier mismatch {}", best);
            }
        }

        #[test]
        fn dimension_count_invariant(seed in any::<u64>(), m in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = random_hamiltonian(&mut rng, m, 1.0);
            let c = classify(&b, ClassifyMode::HamiltonMatrix, &tol()).unwrap();
            let total: usize = c.groups.iter().map(|g| g.dimension()).sum();
            prop_assert_eq!(total, 2 * m);
            prop_assert_eq!(c.is_loxodromic, c.n_elliptic == 0);
        }
    }
}
