//! Query tables for a single demanded combination: evaluation points,
//! column multipliers, super-message coefficient vectors and one
//! dependency vector per candidate support.
//!
//! The multipliers are picked so that row `i` of the super-message matrix is
//! `[α_j ω_j^i]_j`. A degree-`K-D` polynomial `g` then gives the combination
//! `sum_j α_j g(ω_j) X_j`, and choosing `g` to vanish off a `D`-subset makes
//! that combination supported on exactly that subset. For the demand's own
//! support the multipliers are scaled so the combination is `c · V`.
//!
//! Randomness is consumed from one stream in a fixed order: evaluation
//! points, then free multipliers by ascending message index, then one scalar
//! per candidate support by ascending subset index. Overridden values are
//! not drawn.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{PltError, Result};
use crate::field::{Fe, PrimeField};
use crate::poly::Poly;

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// All `d`-subsets of `{0, …, k-1}` in lexicographic order of their sorted elements.
pub fn enumerate_subsets(k: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if d > k {
        return out;
    }
    let mut cur: Vec<usize> = (0..d).collect();
    loop {
        out.push(cur.clone());
        // advance the rightmost element that still has room
        let Some(i) = (0..d).rev().find(|&i| cur[i] < k - d + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..d {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// One demanded linear combination `sum_{j in support} coeffs[j] X_j`.
///
/// Message indices are 0-based. The support is kept sorted with the
/// coefficients permuted alongside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Demand {
    support: Vec<usize>,
    coeffs: Vec<Fe>,
}

impl Demand {
    pub fn new(field: &PrimeField, k: usize, support: &[usize], coeffs: &[Fe]) -> Result<Self> {
        if support.is_empty() {
            return Err(PltError::InvalidDemand("empty support".into()));
        }
        if support.len() != coeffs.len() {
            return Err(PltError::InvalidDemand(format!(
                "{} indices but {} coefficients",
                support.len(),
                coeffs.len()
            )));
        }
        let mut pairs: Vec<(usize, Fe)> = support.iter().copied().zip(coeffs.iter().copied()).collect();
        pairs.sort_by_key(|p| p.0);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(PltError::InvalidDemand(format!("index {} repeated", w[0].0)));
            }
        }
        for &(i, c) in &pairs {
            if i >= k {
                return Err(PltError::InvalidDemand(format!("index {i} out of range for {k} messages")));
            }
            if c.is_zero() || c.value() >= field.modulus() {
                return Err(PltError::InvalidDemand(format!("coefficient {c} for index {i} is not a nonzero element of {field}")));
            }
        }
        Ok(Demand {
            support: pairs.iter().map(|p| p.0).collect(),
            coeffs: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// Uniform support among `d`-subsets and uniform nonzero coefficients.
    pub fn random<R: Rng + ?Sized>(field: &PrimeField, k: usize, d: usize, rng: &mut R) -> Result<Self> {
        if d == 0 || d > k {
            return Err(PltError::InvalidDemand(format!("support size {d} invalid for {k} messages")));
        }
        let support = rand::seq::index::sample(rng, k, d).into_vec();
        Self::random_with_support(field, k, &support, rng)
    }

    pub fn random_with_support<R: Rng + ?Sized>(field: &PrimeField, k: usize, support: &[usize], rng: &mut R) -> Result<Self> {
        let mut support = support.to_vec();
        support.sort_unstable();
        let coeffs: Vec<Fe> = support.iter().map(|_| field.random_nonzero(rng)).collect();
        Demand::new(field, k, &support, &coeffs)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn coeffs(&self) -> &[Fe] {
        &self.coeffs
    }

    pub fn size(&self) -> usize {
        self.support.len()
    }

    /// Coefficient of message `j`, zero off the support.
    pub fn coeff_of(&self, j: usize) -> Fe {
        self.support
            .iter()
            .position(|&i| i == j)
            .map_or(Fe::ZERO, |p| self.coeffs[p])
    }
}

/// Deterministic replacements for the random choices; used to reproduce
/// worked examples and to build audit mutants.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GrsOverrides {
    pub omegas: Option<Vec<Fe>>,
    /// Multipliers for indices outside the support, keyed by message index.
    pub alphas: BTreeMap<usize, Fe>,
    /// Scalars `c_f`, keyed by subset index.
    pub scalars: BTreeMap<usize, Fe>,
}

/// `k` distinct evaluation points, sampled without replacement.
pub fn choose_omegas<R: Rng + ?Sized>(field: &PrimeField, k: usize, rng: &mut R) -> Result<Vec<Fe>> {
    let q = field.modulus();
    if q < k as u64 {
        return Err(PltError::FieldTooSmall { q, k });
    }
    Ok(rand::seq::index::sample(rng, q as usize, k)
        .into_iter()
        .map(|v| field.elem(v as u64))
        .collect())
}

/// The user's private choices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrsSecret {
    pub omegas: Vec<Fe>,
    pub alphas: Vec<Fe>,
    /// `prod_{j not in support} (x - ω_j)`
    pub p_poly: Poly,
}

pub fn build_secret<R: Rng + ?Sized>(
    field: &PrimeField,
    demand: &Demand,
    omegas: Vec<Fe>,
    alpha_overrides: &BTreeMap<usize, Fe>,
    rng: &mut R,
) -> Result<GrsSecret> {
    let k = omegas.len();
    let mut sorted = omegas.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(PltError::InvalidParams("evaluation points are not distinct".into()));
    }
    if demand.support().iter().any(|&i| i >= k) {
        return Err(PltError::InvalidDemand(format!("support exceeds {k} messages")));
    }
    let outside: Vec<usize> = (0..k).filter(|j| !demand.support().contains(j)).collect();
    let roots: Vec<Fe> = outside.iter().map(|&j| omegas[j]).collect();
    let p_poly = Poly::from_roots(field, &roots);
    let mut alphas = vec![Fe::ZERO; k];
    for (&j, &v) in demand.support().iter().zip(demand.coeffs()) {
        alphas[j] = field.div(v, p_poly.eval(field, omegas[j]))?;
    }
    for &j in &outside {
        alphas[j] = match alpha_overrides.get(&j) {
            Some(&a) if a.is_zero() => {
                return Err(PltError::InvalidParams(format!("override α_{j} must be nonzero")))
            }
            Some(&a) => a,
            None => field.random_nonzero(rng),
        };
    }
    Ok(GrsSecret { omegas, alphas, p_poly })
}

/// The `r x K` coefficient matrix of the super-messages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperMessageSpec {
    pub q_vectors: Vec<Vec<Fe>>,
}

impl SuperMessageSpec {
    pub fn r(&self) -> usize {
        self.q_vectors.len()
    }

    pub fn k(&self) -> usize {
        self.q_vectors.first().map_or(0, Vec::len)
    }

    /// Message coefficients of `sum_i beta[i] · Q_i`.
    pub fn combine(&self, field: &PrimeField, beta: &[Fe]) -> Vec<Fe> {
        crate::linalg::combine(field, beta, &self.q_vectors)
    }
}

/// Row `i` (0-based) is `[α_j ω_j^i]_j`, for `r = K - D + 1` rows.
pub fn build_q_vectors(field: &PrimeField, secret: &GrsSecret, d: usize) -> SuperMessageSpec {
    let k = secret.omegas.len();
    let r = k - d + 1;
    let mut rows = Vec::with_capacity(r);
    let mut cur = secret.alphas.clone();
    for _ in 0..r {
        rows.push(cur.clone());
        for (c, &w) in cur.iter_mut().zip(&secret.omegas) {
            *c = field.mul(*c, w);
        }
    }
    SuperMessageSpec { q_vectors: rows }
}

/// Coefficients (low-degree-first, length `r`) of `c · prod_{j not in subset} (x - ω_j)`.
pub fn derive_beta(field: &PrimeField, omegas: &[Fe], subset: &[usize], c: Fe) -> Vec<Fe> {
    let roots: Vec<Fe> = (0..omegas.len())
        .filter(|j| !subset.contains(j))
        .map(|j| omegas[j])
        .collect();
    let r = roots.len() + 1;
    Poly::from_roots(field, &roots).scale(field, c).padded(r)
}

/// Indices of nonzero entries.
pub fn support_of(v: &[Fe]) -> Vec<usize> {
    v.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, _)| i).collect()
}

/// One dependency vector per candidate support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionTable {
    pub subsets: Vec<Vec<usize>>,
    pub betas: Vec<Vec<Fe>>,
    /// The scalar `c_f` behind each `β_f`.
    pub scalars: Vec<Fe>,
    /// Index of the subset equal to the demand's support.
    pub star_index: usize,
    /// `δ` with `Y_{star} = δ · demand`.
    pub star_scalar: Fe,
}

impl FunctionTable {
    pub fn f(&self) -> usize {
        self.subsets.len()
    }
}

pub fn build_function_table<R: Rng + ?Sized>(
    field: &PrimeField,
    secret: &GrsSecret,
    spec: &SuperMessageSpec,
    demand: &Demand,
    scalar_overrides: &BTreeMap<usize, Fe>,
    rng: &mut R,
) -> Result<FunctionTable> {
    let k = secret.omegas.len();
    let subsets = enumerate_subsets(k, demand.size());
    let star_index = subsets
        .iter()
        .position(|s| s.as_slice() == demand.support())
        .ok_or_else(|| PltError::InvalidDemand("support is not a D-subset of the messages".into()))?;
    let mut betas = Vec::with_capacity(subsets.len());
    let mut scalars = Vec::with_capacity(subsets.len());
    for (f, subset) in subsets.iter().enumerate() {
        let c = match scalar_overrides.get(&f) {
            Some(&c) if c.is_zero() => {
                return Err(PltError::InvalidParams(format!("override scalar c_{f} must be nonzero")))
            }
            Some(&c) => c,
            None => field.random_nonzero(rng),
        };
        betas.push(derive_beta(field, &secret.omegas, subset, c));
        scalars.push(c);
    }
    let star_scalar = scalars[star_index];
    let y_star = spec.combine(field, &betas[star_index]);
    for j in 0..k {
        let want = field.mul(star_scalar, demand.coeff_of(j));
        if y_star[j] != want {
            return Err(PltError::InternalInvariant(format!(
                "demanded function has coefficient {} at message {j}, expected {want}",
                y_star[j]
            )));
        }
    }
    Ok(FunctionTable { subsets, betas, scalars, star_index, star_scalar })
}

/// All query tables for one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrsTables {
    pub secret: GrsSecret,
    pub spec: SuperMessageSpec,
    pub table: FunctionTable,
}

/// Runs the whole construction against one random stream.
pub fn build_tables<R: Rng + ?Sized>(
    field: &PrimeField,
    k: usize,
    demand: &Demand,
    overrides: &GrsOverrides,
    rng: &mut R,
) -> Result<GrsTables> {
    let omegas = match &overrides.omegas {
        Some(w) => {
            if w.len() != k {
                return Err(PltError::InvalidParams(format!("{} evaluation points for {k} messages", w.len())));
            }
            w.clone()
        }
        None => choose_omegas(field, k, rng)?,
    };
    let secret = build_secret(field, demand, omegas, &overrides.alphas, rng)?;
    let spec = build_q_vectors(field, &secret, demand.size());
    let table = build_function_table(field, &secret, &spec, demand, &overrides.scalars, rng)?;
    Ok(GrsTables { secret, spec, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    fn vals(f: &PrimeField, v: &[u64]) -> Vec<Fe> {
        v.iter().map(|&x| f.elem(x)).collect()
    }

    fn example1() -> (PrimeField, Demand, GrsTables) {
        let f = gf(5);
        let demand = Demand::new(&f, 4, &[0, 1, 2], &vals(&f, &[2, 1, 1])).unwrap();
        let overrides = GrsOverrides {
            omegas: Some(vals(&f, &[0, 1, 2, 3])),
            alphas: BTreeMap::from([(3, f.elem(2))]),
            scalars: BTreeMap::from([(0, f.elem(2)), (1, f.elem(1)), (2, f.elem(4)), (3, f.elem(3))]),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = build_tables(&f, 4, &demand, &overrides, &mut rng).unwrap();
        (f, demand, t)
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 3), 4);
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(20, 10), 184_756);
        assert_eq!(binomial(0, 0), 1);
    }

    #[test]
    fn subsets_lexicographic() {
        assert_eq!(
            enumerate_subsets(4, 3),
            vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]]
        );
        assert_eq!(enumerate_subsets(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(enumerate_subsets(3, 0), vec![Vec::<usize>::new()]);
        let s = enumerate_subsets(5, 2);
        assert_eq!(s.len(), 10);
        assert_eq!(&s[..2], &[vec![0, 1], vec![0, 2]]);
    }

    #[test]
    fn subsets_match_brute_force() {
        for k in 0..=8usize {
            for d in 0..=k {
                let mut brute: Vec<Vec<usize>> = (0u32..1 << k)
                    .filter(|m| m.count_ones() as usize == d)
                    .map(|m| (0..k).filter(|i| m >> i & 1 == 1).collect())
                    .collect();
                brute.sort();
                assert_eq!(enumerate_subsets(k, d), brute);
                assert_eq!(brute.len() as u64, binomial(k as u64, d as u64));
            }
        }
    }

    #[test]
    fn demand_validation() {
        let f = gf(5);
        assert!(Demand::new(&f, 4, &[0, 0], &vals(&f, &[1, 1])).is_err());
        assert!(Demand::new(&f, 4, &[0, 4], &vals(&f, &[1, 1])).is_err());
        assert!(Demand::new(&f, 4, &[0, 1], &vals(&f, &[1, 0])).is_err());
        assert!(Demand::new(&f, 4, &[0], &vals(&f, &[1, 2])).is_err());
        let d = Demand::new(&f, 4, &[2, 0], &vals(&f, &[3, 4])).unwrap();
        assert_eq!(d.support(), &[0, 2]);
        assert_eq!(d.coeffs(), vals(&f, &[4, 3]).as_slice());
        assert_eq!(d.coeff_of(1), Fe::ZERO);
    }

    #[test]
    fn omegas_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f2 = gf(2);
        let mut w = choose_omegas(&f2, 2, &mut rng).unwrap();
        w.sort();
        assert_eq!(w, vals(&f2, &[0, 1]));
        assert!(matches!(choose_omegas(&gf(3), 4, &mut rng), Err(PltError::FieldTooSmall { q: 3, k: 4 })));
        // q = K exhausts the field
        let f5 = gf(5);
        let mut w = choose_omegas(&f5, 5, &mut rng).unwrap();
        w.sort();
        assert_eq!(w, f5.elements().collect::<Vec<_>>());
    }

    #[test]
    fn example1_secret_and_q_vectors() {
        let (f, _, t) = example1();
        assert_eq!(t.secret.p_poly.coeffs(), vals(&f, &[2, 1]).as_slice());
        assert_eq!(t.secret.alphas, vals(&f, &[1, 2, 4, 2]));
        assert_eq!(t.spec.q_vectors, vec![vals(&f, &[1, 2, 4, 2]), vals(&f, &[0, 2, 3, 1])]);
    }

    #[test]
    fn example1_function_table() {
        let (f, _, t) = example1();
        let tab = &t.table;
        assert_eq!(
            tab.betas,
            vec![vals(&f, &[4, 2]), vals(&f, &[3, 1]), vals(&f, &[1, 4]), vals(&f, &[0, 3])]
        );
        assert_eq!(tab.star_index, 0);
        assert_eq!(tab.star_scalar, f.elem(2));
        let y: Vec<Vec<Fe>> = tab.betas.iter().map(|b| t.spec.combine(&f, b)).collect();
        assert_eq!(
            y,
            vec![vals(&f, &[4, 2, 2, 0]), vals(&f, &[3, 3, 0, 2]), vals(&f, &[1, 0, 1, 1]), vals(&f, &[0, 1, 4, 3])]
        );
        // demand = 3 · Y_1
        let three_y1: Vec<Fe> = y[0].iter().map(|&c| f.mul(f.elem(3), c)).collect();
        assert_eq!(three_y1, vals(&f, &[2, 1, 1, 0]));
    }

    #[test]
    fn derive_beta_examples() {
        let f = gf(5);
        let omegas = vals(&f, &[0, 1, 2, 3]);
        assert_eq!(derive_beta(&f, &omegas, &[1, 2, 3], f.elem(3)), vals(&f, &[0, 3]));
        assert_eq!(derive_beta(&f, &omegas, &[0, 1, 2], f.elem(2)), vals(&f, &[4, 2]));
        // scalar sweep: q-1 distinct vectors, all multiples of one another
        let (_, _, t) = example1();
        for subset in enumerate_subsets(4, 3) {
            let class: Vec<Vec<Fe>> = f
                .nonzero_elements()
                .map(|c| derive_beta(&f, &omegas, &subset, c))
                .collect();
            let mut uniq = class.clone();
            uniq.sort();
            uniq.dedup();
            assert_eq!(uniq.len(), 4);
            assert_eq!(linalg::rank(&f, &class), 1);
            for b in &class {
                assert_eq!(support_of(&t.spec.combine(&f, b)), subset);
            }
        }
    }

    #[test]
    fn full_support_demand_uses_coefficients_directly() {
        let f = gf(7);
        let demand = Demand::new(&f, 3, &[0, 1, 2], &vals(&f, &[3, 5, 6])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = build_tables(&f, 3, &demand, &GrsOverrides::default(), &mut rng).unwrap();
        assert_eq!(t.secret.alphas, demand.coeffs());
        assert_eq!(t.spec.q_vectors, vec![demand.coeffs().to_vec()]);
        assert_eq!(t.table.f(), 1);
        assert_eq!(t.table.star_index, 0);
    }

    #[test]
    fn random_instances_satisfy_structure() {
        for q in [5u64, 7, 11] {
            let f = gf(q);
            for k in 1..=6usize.min(q as usize) {
                for d in 1..=k {
                    let mut rng = ChaCha8Rng::seed_from_u64(q * 100 + (k * 10 + d) as u64);
                    for _ in 0..5 {
                        let demand = Demand::random(&f, k, d, &mut rng).unwrap();
                        let t = build_tables(&f, k, &demand, &GrsOverrides::default(), &mut rng).unwrap();
                        let r = k - d + 1;
                        assert_eq!(t.spec.r(), r);
                        assert_eq!(linalg::rank(&f, &t.spec.q_vectors), r);
                        for j in 0..k {
                            let vanishes = t.secret.p_poly.eval(&f, t.secret.omegas[j]).is_zero();
                            assert_eq!(vanishes, !demand.support().contains(&j));
                            assert!(!t.secret.alphas[j].is_zero());
                        }
                        for (subset, beta) in t.table.subsets.iter().zip(&t.table.betas) {
                            assert_eq!(&support_of(&t.spec.combine(&f, beta)), subset);
                        }
                        let y = t.spec.combine(&f, &t.table.betas[t.table.star_index]);
                        let inv = f.inv(t.table.star_scalar).unwrap();
                        for j in 0..k {
                            assert_eq!(f.mul(inv, y[j]), demand.coeff_of(j));
                        }
                    }
                }
            }
        }
    }
}
