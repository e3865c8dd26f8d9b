//! Real Mobius transformations, automorphy factors, the genus-2 octagon
//! group, bounded word enumeration, and Dirichlet fundamental-domain
//! membership for the hyperbolic backend.
//!
//! Distances in this module are plain upper-half-plane hyperbolic distances
//! (curvature -1). The geometry module applies the metric scale factor that
//! relates them to the symplectic metric.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Center of the Dirichlet fundamental domain (image of the disc origin).
pub const DOMAIN_CENTER: Complex64 = Complex64::new(0.0, 1.0);

/// An element of PSL(2, R) stored as a unit-determinant matrix (a b; c d)
/// with a canonical projective sign: the first entry of (a, b, c, d) larger
/// than 1e-12 in magnitude is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusTransform {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MobiusTransform {
    pub fn identity() -> Self {
        Self { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    /// Builds a transform from matrix entries; the determinant must be
    /// positive and the entries are rescaled to det = 1. Entries that are
    /// unit-determinant already (round-tripped fixtures) pass through
    /// bit-exactly, which keeps re-enumeration orders reproducible.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::Parameter(format!(
                "Mobius matrix must have positive determinant, got {det}"
            )));
        }
        let s = if (det - 1.0).abs() < 1e-12 { 1.0 } else { det.sqrt() };
        Ok(Self { a: a / s, b: b / s, c: c / s, d: d / s }.canonicalized())
    }

    /// Fixes the projective sign ambiguity gamma ~ -gamma.
    pub fn canonicalized(self) -> Self {
        for e in [self.a, self.b, self.c, self.d] {
            if e.abs() > 1e-12 {
                if e < 0.0 {
                    return Self { a: -self.a, b: -self.b, c: -self.c, d: -self.d };
                }
                return self;
            }
        }
        self
    }

    /// Matrix product, renormalized to det = 1 and canonical sign.
    pub fn compose(&self, other: &Self) -> Self {
        let a = self.a * other.a + self.b * other.c;
        let b = self.a * other.b + self.b * other.d;
        let c = self.c * other.a + self.d * other.c;
        let d = self.c * other.b + self.d * other.d;
        let det = a * d - b * c;
        let s = det.sqrt();
        Self { a: a / s, b: b / s, c: c / s, d: d / s }.canonicalized()
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }.canonicalized()
    }

    /// gamma z = (az + b)/(cz + d); requires Im z > 0.
    pub fn apply(&self, z: Complex64) -> Result<Complex64> {
        if !(z.im > 0.0) {
            return Err(Error::Domain(format!("Mobius action requires Im z > 0, got {}", z.im)));
        }
        Ok(self.apply_unchecked(z))
    }

    #[inline]
    pub(crate) fn apply_unchecked(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Automorphy factor j(gamma, z) = cz + d.
    #[inline]
    pub fn automorphy_factor(&self, z: Complex64) -> Complex64 {
        self.c * z + self.d
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.trace().abs() > 2.0
    }

    /// Projective distance to another element: entrywise gap after aligning
    /// signs, relative to the larger matrix magnitude.
    pub fn projective_gap(&self, other: &Self) -> f64 {
        let direct = (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
            .max((self.d - other.d).abs());
        let flipped = (self.a + other.a)
            .abs()
            .max((self.b + other.b).abs())
            .max((self.c + other.c).abs())
            .max((self.d + other.d).abs());
        direct.min(flipped)
    }

    fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

/// Curvature -1 hyperbolic distance on the upper half-plane.
pub fn hyperbolic_distance(z: Complex64, w: Complex64) -> f64 {
    let q = 1.0 + (z - w).norm_sqr() / (2.0 * z.im * w.im);
    q.max(1.0).acosh()
}

/// Side-pairing generators of the regular hyperbolic octagon group
/// (genus 2). In the disc model these are translations of length
/// 2 arccosh(1 + sqrt 2) along the axes at angles j pi/4 through the
/// origin, identifying opposite octagon sides; here they are transported
/// to the upper half-plane with the domain center at i.
///
/// They satisfy g0 g1^-1 g2 g3^-1 g0^-1 g1 g2^-1 g3 = 1.
pub fn genus2_generators() -> [MobiusTransform; 4] {
    let alpha = 1.0 + std::f64::consts::SQRT_2; // cosh of half the translation length
    let beta = (2.0 + 2.0 * std::f64::consts::SQRT_2).sqrt();
    let mut out = [MobiusTransform::identity(); 4];
    for (j, slot) in out.iter_mut().enumerate() {
        let theta = j as f64 * std::f64::consts::FRAC_PI_4;
        // SU(1,1) element (alpha, e^{i theta} beta; e^{-i theta} beta, alpha)
        // conjugated by the Cayley map zeta -> i(1 + zeta)/(1 - zeta).
        let bt = Complex64::from_polar(beta, theta);
        let su = [
            [Complex64::new(alpha, 0.0), bt],
            [bt.conj(), Complex64::new(alpha, 0.0)],
        ];
        *slot = cayley_transport(su);
    }
    out
}

/// A generating quadruple (a1, b1, a2, b2) of the same group satisfying the
/// standard surface relator [a1, b1][a2, b2] = 1; obtained from the octagon
/// side pairings g by a1 = g0, b1 = g1^-1 g2 g3^-1, a2 = g1^-1 g2,
/// b2 = g3^-1 g1.
pub fn genus2_standard_quadruple() -> [MobiusTransform; 4] {
    let [g0, g1, g2, g3] = genus2_generators();
    let a1 = g0;
    let b1 = g1.inverse().compose(&g2).compose(&g3.inverse());
    let a2 = g1.inverse().compose(&g2);
    let b2 = g3.inverse().compose(&g1);
    [a1, b1, a2, b2]
}

/// Conjugates an SU(1,1) matrix by the Cayley map and checks that the
/// result is real SL(2, R).
fn cayley_transport(m: [[Complex64; 2]; 2]) -> MobiusTransform {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    // C = (i i; -1 1), C^-1 = (1 -i; 1 i)/(2i); the determinant scale cancels.
    let c = [[i, i], [-one, one]];
    let det = Complex64::new(0.0, 2.0);
    let cinv = [[one / det, -i / det], [one / det, i / det]];
    let mut t = [[Complex64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for s in 0..2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..2 {
                for q in 0..2 {
                    acc += c[r][p] * m[p][q] * cinv[q][s];
                }
            }
            t[r][s] = acc;
        }
    }
    let imag_max = t.iter().flatten().map(|z| z.im.abs()).fold(0.0, f64::max);
    debug_assert!(imag_max < 1e-10, "Cayley transport left imaginary residue {imag_max}");
    MobiusTransform::new(t[0][0].re, t[0][1].re, t[1][0].re, t[1][1].re)
        .expect("transported SU(1,1) element must land in SL(2,R)")
}

/// Options for bounded word enumeration.
#[derive(Debug, Clone)]
pub struct EnumerationOptions {
    pub max_word_length: u32,
    /// Hard cap on the number of distinct elements.
    pub element_cap: usize,
    /// If set, discard elements whose translation distance
    /// d(gamma i, i) exceeds this bound (hyperbolic distance). Word growth is
    /// exponential but only elements within a fixed distance of the domain
    /// contribute to truncated Poincare series, so pruning keeps long word
    /// lengths tractable.
    pub prune_distance: Option<f64>,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self { max_word_length: 4, element_cap: 200_000, prune_distance: None }
    }
}

/// A deduplicated ball in the group: all elements expressible as words of
/// bounded length in the generators, each with its word length.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupEnumeration {
    /// The defining generators (without inverses).
    pub generators: Vec<MobiusTransform>,
    /// Distinct elements sorted by word length, then lexicographically by
    /// matrix entries. Contains the identity; closed under inverses.
    pub elements: Vec<MobiusTransform>,
    /// Word length of each element, parallel to `elements`.
    pub word_lengths: Vec<u32>,
    pub max_word_length: u32,
    /// Distance prune used during enumeration, if any.
    pub prune_distance: Option<f64>,
}

/// Quantized-key hash set for projective dedup of SL(2,R) matrices.
struct MatrixSet {
    buckets: HashMap<[i64; 4], Vec<usize>>,
    scale: f64,
}

impl MatrixSet {
    fn new() -> Self {
        Self { buckets: HashMap::new(), scale: 1e-6 }
    }

    fn key(&self, m: &MobiusTransform) -> [i64; 4] {
        let e = m.entries();
        [0, 1, 2, 3].map(|i| (e[i] / self.scale).round() as i64)
    }

    /// Tests membership against all neighboring buckets, so elements that
    /// straddle a quantization boundary are still caught.
    fn contains(&self, m: &MobiusTransform, elements: &[MobiusTransform], tol: f64) -> bool {
        let base = self.key(m);
        let mut probe = [0i64; 4];
        for da in -1..=1 {
            for db in -1..=1 {
                for dc in -1..=1 {
                    for dd in -1..=1 {
                        probe = [base[0] + da, base[1] + db, base[2] + dc, base[3] + dd];
                        if let Some(ids) = self.buckets.get(&probe) {
                            if ids.iter().any(|&i| elements[i].projective_gap(m) < tol) {
                                return true;
                            }
                        }
                    }
                }
            }
        }
        let _ = probe;
        false
    }

    fn insert(&mut self, m: &MobiusTransform, index: usize) {
        self.buckets.entry(self.key(m)).or_default().push(index);
    }
}

/// Breadth-first enumeration of group words up to `max_word_length`,
/// deduplicated projectively. Deterministic: elements come out sorted by
/// word length then lexicographic matrix entries.
pub fn enumerate_group(
    generators: &[MobiusTransform],
    opts: &EnumerationOptions,
) -> Result<GroupEnumeration> {
    let mut step = Vec::with_capacity(2 * generators.len());
    for g in generators {
        step.push(*g);
    }
    for g in generators {
        step.push(g.inverse());
    }

    let mut elements = vec![MobiusTransform::identity()];
    let mut lengths = vec![0u32];
    let mut seen = MatrixSet::new();
    seen.insert(&elements[0], 0);
    let dedup_tol = 1e-9;

    let mut frontier = vec![MobiusTransform::identity()];
    for len in 1..=opts.max_word_length {
        let mut next = Vec::new();
        for m in &frontier {
            for s in &step {
                let cand = m.compose(s);
                if seen.contains(&cand, &elements, dedup_tol) {
                    continue;
                }
                if let Some(r) = opts.prune_distance {
                    let d = hyperbolic_distance(cand.apply_unchecked(DOMAIN_CENTER), DOMAIN_CENTER);
                    if d > r {
                        continue;
                    }
                }
                seen.insert(&cand, elements.len());
                elements.push(cand);
                lengths.push(len);
                next.push(cand);
                if elements.len() > opts.element_cap {
                    return Err(Error::EnumerationCap(format!(
                        "more than {} elements at word length {len}",
                        opts.element_cap
                    )));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }

    let mut order: Vec<usize> = (0..elements.len()).collect();
    order.sort_by(|&i, &j| {
        lengths[i]
            .cmp(&lengths[j])
            .then_with(|| elements[i].entries().partial_cmp(&elements[j].entries()).unwrap())
    });
    let elements_sorted: Vec<_> = order.iter().map(|&i| elements[i]).collect();
    let lengths_sorted: Vec<_> = order.iter().map(|&i| lengths[i]).collect();

    Ok(GroupEnumeration {
        generators: generators.to_vec(),
        elements: elements_sorted,
        word_lengths: lengths_sorted,
        max_word_length: opts.max_word_length,
        prune_distance: opts.prune_distance,
    })
}

/// Compact JSON fixture for a group: generators as entry quadruples plus
/// the enumeration parameters, sufficient to rebuild the element list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupFixture {
    pub generators: Vec<[f64; 4]>,
    pub max_word_length: u32,
    pub element_count: usize,
}

impl GroupEnumeration {
    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn fixture(&self) -> GroupFixture {
        GroupFixture {
            generators: self.generators.iter().map(|g| [g.a, g.b, g.c, g.d]).collect(),
            max_word_length: self.max_word_length,
            element_count: self.element_count(),
        }
    }

    /// Rebuilds the enumeration from a fixture and cross-checks the
    /// recorded element count.
    pub fn from_fixture(fixture: &GroupFixture, element_cap: usize) -> Result<Self> {
        let generators: Vec<MobiusTransform> = fixture
            .generators
            .iter()
            .map(|[a, b, c, d]| MobiusTransform::new(*a, *b, *c, *d))
            .collect::<Result<_>>()?;
        let opts = EnumerationOptions {
            max_word_length: fixture.max_word_length,
            element_cap,
            prune_distance: None,
        };
        let e = enumerate_group(&generators, &opts)?;
        if e.element_count() != fixture.element_count {
            return Err(Error::Inconsistent(format!(
                "fixture records {} elements, enumeration found {}",
                fixture.element_count,
                e.element_count()
            )));
        }
        Ok(e)
    }

    /// Elements of word length at most `len`.
    pub fn elements_up_to(&self, len: u32) -> impl Iterator<Item = &MobiusTransform> {
        self.elements
            .iter()
            .zip(&self.word_lengths)
            .filter(move |(_, &l)| l <= len)
            .map(|(m, _)| m)
    }

    /// The short element list used for Dirichlet membership tests. The
    /// octagon domain is cut out by the word-length-1 elements already;
    /// taking everything up to length 2 is safely redundant.
    fn membership_elements(&self) -> impl Iterator<Item = &MobiusTransform> {
        self.elements_up_to(self.max_word_length.min(2))
    }

    /// Dirichlet-domain membership centered at i: true iff
    /// d(z, i) <= d(gamma z, i) for every non-identity element, with ties
    /// kept in the identity cell.
    pub fn in_fundamental_domain(&self, z: Complex64) -> Result<bool> {
        if !(z.im > 0.0) {
            return Err(Error::Domain(format!("Im z must be positive, got {}", z.im)));
        }
        let d0 = hyperbolic_distance(z, DOMAIN_CENTER);
        for m in self.membership_elements() {
            if m.projective_gap(&MobiusTransform::identity()) < 1e-12 {
                continue;
            }
            if hyperbolic_distance(m.apply_unchecked(z), DOMAIN_CENTER) < d0 - 1e-12 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Translation distance of the farthest retained element; a crude
    /// indicator of how much of the group ball is present.
    pub fn max_translation_distance(&self) -> f64 {
        self.elements
            .iter()
            .map(|m| hyperbolic_distance(m.apply_unchecked(DOMAIN_CENTER), DOMAIN_CENTER))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rot90() -> MobiusTransform {
        MobiusTransform::new(0.0, -1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn identity_fixes_points() {
        let z = Complex64::new(1.0, 2.0);
        assert_eq!(MobiusTransform::identity().apply(z).unwrap(), z);
    }

    #[test]
    fn inversion_fixes_i() {
        let z = rot90().apply(Complex64::i()).unwrap();
        assert_relative_eq!((z - Complex64::i()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn apply_rejects_lower_half_plane() {
        assert!(rot90().apply(Complex64::new(0.3, -0.2)).is_err());
    }

    #[test]
    fn imaginary_part_transforms_by_automorphy_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let gens = genus2_generators();
        for _ in 0..100 {
            let z = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.1..3.0));
            let g = gens[rng.gen_range(0..4)];
            let gz = g.apply(z).unwrap();
            assert_relative_eq!(
                gz.im,
                z.im / g.automorphy_factor(z).norm_sqr(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn automorphy_cocycle_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let gens = genus2_generators();
        assert_eq!(
            MobiusTransform::identity().automorphy_factor(Complex64::new(0.4, 1.0)),
            Complex64::new(1.0, 0.0)
        );
        // j(gamma, z) is defined up to the projective sign of gamma.
        let m = rot90();
        let j = m.automorphy_factor(Complex64::new(0.0, 2.0));
        let target = Complex64::new(0.0, 2.0);
        assert!((j - target).norm().min((j + target).norm()) < 1e-15);
        for _ in 0..100 {
            let z = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.1..3.0));
            let g1 = gens[rng.gen_range(0..4)];
            let g2 = gens[rng.gen_range(0..4)].inverse();
            let lhs = g1.compose(&g2).automorphy_factor(z);
            let rhs = g1.automorphy_factor(g2.apply(z).unwrap()) * g2.automorphy_factor(z);
            // The composed matrix is sign-canonicalized, so compare projectively.
            let gap = (lhs - rhs).norm().min((lhs + rhs).norm());
            assert!(gap < 1e-12, "cocycle gap {gap}");
        }
    }

    #[test]
    fn octagon_relator_is_identity() {
        let [g0, g1, g2, g3] = genus2_generators();
        let r = g0
            .compose(&g1.inverse())
            .compose(&g2)
            .compose(&g3.inverse())
            .compose(&g0.inverse())
            .compose(&g1)
            .compose(&g2.inverse())
            .compose(&g3);
        assert!(r.projective_gap(&MobiusTransform::identity()) < 1e-9, "relator gap");
    }

    #[test]
    fn commutator_relator_is_identity() {
        let [a1, b1, a2, b2] = genus2_standard_quadruple();
        let comm = |x: &MobiusTransform, y: &MobiusTransform| {
            x.compose(y).compose(&x.inverse()).compose(&y.inverse())
        };
        let r = comm(&a1, &b1).compose(&comm(&a2, &b2));
        assert!(r.projective_gap(&MobiusTransform::identity()) < 1e-9);
    }

    #[test]
    fn generators_are_hyperbolic() {
        for g in genus2_generators() {
            assert!(g.is_hyperbolic());
            assert_relative_eq!(
                g.trace().abs(),
                2.0 * (1.0 + std::f64::consts::SQRT_2),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn octagon_images_are_distinct_and_equidistant() {
        let gens = genus2_generators();
        let mut images = Vec::new();
        for g in &gens {
            images.push(g.apply(DOMAIN_CENTER).unwrap());
            images.push(g.inverse().apply(DOMAIN_CENTER).unwrap());
        }
        let expected = 2.0 * (1.0 + std::f64::consts::SQRT_2).acosh();
        for (i, zi) in images.iter().enumerate() {
            assert_relative_eq!(
                hyperbolic_distance(*zi, DOMAIN_CENTER),
                expected,
                epsilon = 1e-9
            );
            for zj in &images[i + 1..] {
                assert!((zi - zj).norm() > 1e-6, "octagon images must be distinct");
            }
        }
    }

    #[test]
    fn enumeration_counts_match_free_growth_until_relator_length() {
        let gens = genus2_generators();
        let opts = EnumerationOptions { max_word_length: 4, ..Default::default() };
        let e = enumerate_group(&gens, &opts).unwrap();
        let count_at = |l: u32| e.word_lengths.iter().filter(|&&x| x <= l).count();
        // Free growth: spheres 1, 8, 8*7, 8*7^2; the octagon relator has
        // length 8, so the first collapses appear among length-4 words.
        assert_eq!(count_at(0), 1);
        assert_eq!(count_at(1), 9);
        assert_eq!(count_at(2), 65);
        assert_eq!(count_at(3), 457);
        let free_b4 = 457 + 8 * 7 * 7 * 7;
        assert!(count_at(4) < free_b4, "length-4 words must start collapsing");
        assert!(count_at(4) > count_at(3));
    }

    #[test]
    fn enumeration_is_deterministic() {
        let gens = genus2_generators();
        let opts = EnumerationOptions { max_word_length: 3, ..Default::default() };
        let e1 = enumerate_group(&gens, &opts).unwrap();
        let e2 = enumerate_group(&gens, &opts).unwrap();
        assert_eq!(e1.elements.len(), e2.elements.len());
        for (a, b) in e1.elements.iter().zip(&e2.elements) {
            assert_eq!(a.entries(), b.entries());
        }
    }

    #[test]
    fn enumeration_cap_trips() {
        let gens = genus2_generators();
        let opts = EnumerationOptions { max_word_length: 4, element_cap: 100, prune_distance: None };
        assert!(matches!(enumerate_group(&gens, &opts), Err(Error::EnumerationCap(_))));
    }

    #[test]
    fn closed_under_inverse() {
        let gens = genus2_generators();
        let opts = EnumerationOptions { max_word_length: 3, ..Default::default() };
        let e = enumerate_group(&gens, &opts).unwrap();
        for m in &e.elements {
            let inv = m.inverse();
            assert!(
                e.elements.iter().any(|n| n.projective_gap(&inv) < 1e-9),
                "inverse missing from enumeration"
            );
        }
    }

    #[test]
    fn group_elements_preserve_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gens = genus2_generators();
        let opts = EnumerationOptions { max_word_length: 2, ..Default::default() };
        let e = enumerate_group(&gens, &opts).unwrap();
        for _ in 0..100 {
            let x = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.2..3.0));
            let y = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.2..3.0));
            let m = e.elements[rng.gen_range(0..e.elements.len())];
            let d0 = hyperbolic_distance(x, y);
            let d1 = hyperbolic_distance(m.apply_unchecked(x), m.apply_unchecked(y));
            assert_relative_eq!(d0, d1, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn domain_center_is_inside_generator_images_are_not() {
        let gens = genus2_generators();
        let opts = EnumerationOptions { max_word_length: 2, ..Default::default() };
        let e = enumerate_group(&gens, &opts).unwrap();
        assert!(e.in_fundamental_domain(DOMAIN_CENTER).unwrap());
        for g in &gens {
            let image = g.apply(DOMAIN_CENTER).unwrap();
            assert!(!e.in_fundamental_domain(image).unwrap());
        }
    }

    #[test]
    fn translates_tile_the_plane() {
        // For random points near the domain, exactly one enumerated translate
        // lands inside (boundary has measure zero).
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let gens = genus2_generators();
        let opts = EnumerationOptions { max_word_length: 3, ..Default::default() };
        let e = enumerate_group(&gens, &opts).unwrap();
        let mut good = 0;
        let total = 1000;
        for _ in 0..total {
            // Sample within the octagon's circumradius of the center so every
            // point is coverable at word length <= 3.
            let rho = rng.gen_range(0.0..2.4);
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let w = Complex64::from_polar((rho / 2.0_f64).tanh(), phi);
            let z = (DOMAIN_CENTER - w * DOMAIN_CENTER.conj()) / (Complex64::new(1.0, 0.0) - w);
            let hits = e
                .elements
                .iter()
                .filter(|m| e.in_fundamental_domain(m.apply_unchecked(z)).unwrap())
                .count();
            if hits == 1 {
                good += 1;
            }
        }
        assert!(good as f64 >= 0.999 * total as f64, "tiling fraction {good}/{total}");
    }

    #[test]
    fn distance_prune_keeps_long_words_tractable() {
        let gens = genus2_generators();
        let opts = EnumerationOptions {
            max_word_length: 10,
            element_cap: 200_000,
            prune_distance: Some(8.0),
        };
        let e = enumerate_group(&gens, &opts).unwrap();
        // A hyperbolic ball of radius 8 holds on the order of
        // area(ball)/area(octagon) ~ cosh(8)/2 elements.
        assert!(e.element_count() > 300, "got {}", e.element_count());
        assert!(e.element_count() < 10_000, "got {}", e.element_count());
        assert!(e.max_translation_distance() <= 8.0 + 1e-9);
    }

    #[test]
    fn fixture_round_trips_through_json() {
        let gens = genus2_generators();
        let opts = EnumerationOptions { max_word_length: 2, ..Default::default() };
        let e = enumerate_group(&gens, &opts).unwrap();
        let s = serde_json::to_string(&e.fixture()).unwrap();
        let fixture: GroupFixture = serde_json::from_str(&s).unwrap();
        assert_eq!(fixture.generators.len(), 4);
        let back = GroupEnumeration::from_fixture(&fixture, 200_000).unwrap();
        assert_eq!(back.element_count(), e.element_count());
        for (a, b) in e.elements.iter().zip(&back.elements) {
            assert!(a.projective_gap(b) < 1e-12);
        }
        // A corrupted count is rejected.
        let bad = GroupFixture { element_count: 7, ..fixture };
        assert!(GroupEnumeration::from_fixture(&bad, 200_000).is_err());
    }
}
