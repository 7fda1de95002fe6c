//! Symmetric groups, the Cayley-graph metric and the fixed wirings used by the
//! diagram expansions.
//!
//! Permutations act on `{0, .., m-1}`. For the doubled groups `S_{2p}` the
//! label `(i, Top)` with `i` in `1..=p` is index `i - 1` and `(i, Bottom)` is
//! index `p + i - 1`.

use std::fmt;

use crate::{Error, Result};

/// Largest degree [`enumerate_group`] accepts by default (`8! = 40320`).
pub const DEFAULT_GROUP_BOUND: usize = 8;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    /// Builds a permutation from one-line notation, checking bijectivity.
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let m = images.len();
        let mut seen = vec![false; m];
        for &x in &images {
            if x >= m || seen[x] {
                return Err(Error::InvalidPermutation(images));
            }
            seen[x] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            images: (0..m).collect(),
        }
    }

    /// The transposition swapping `a` and `b` in `S_m`.
    pub fn transposition(m: usize, a: usize, b: usize) -> Result<Self> {
        Self::from_cycles(m, &[vec![a, b]])
    }

    /// Builds a permutation from disjoint cycles; unlisted points are fixed.
    pub fn from_cycles(m: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut images: Vec<usize> = (0..m).collect();
        let mut touched = vec![false; m];
        for cycle in cycles {
            for (idx, &x) in cycle.iter().enumerate() {
                if x >= m || touched[x] {
                    return Err(Error::InvalidPermutation(cycle.clone()));
                }
                touched[x] = true;
                images[x] = cycle[(idx + 1) % cycle.len()];
            }
        }
        Ok(Self { images })
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.degree() != other.degree() {
            return Err(Error::DegreeMismatch(self.degree(), other.degree()));
        }
        Ok(Permutation {
            images: other.images.iter().map(|&j| self.images[j]).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0; self.degree()];
        for (i, &x) in self.images.iter().enumerate() {
            images[x] = i;
        }
        Permutation { images }
    }

    /// Cycles including fixed points, each starting at its smallest element,
    /// ordered by that element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let m = self.degree();
        let mut seen = vec![false; m];
        let mut out = Vec::new();
        for start in 0..m {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                cycle.push(j);
                j = self.images[j];
            }
            out.push(cycle);
        }
        out
    }

    pub fn count_cycles(&self) -> usize {
        count_cycles_slice(&self.images)
    }

    /// `m - #cycles`, the minimal number of transpositions.
    pub fn length(&self) -> usize {
        self.degree() - self.count_cycles()
    }

    pub fn cycle_type(&self) -> CycleType {
        let mut parts: Vec<usize> = self.cycles().iter().map(Vec::len).collect();
        parts.sort_unstable_by(|a, b| b.cmp(a));
        CycleType { parts }
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{:?}", self.images)
    }
}

impl fmt::Display for Permutation {
    /// Cycle notation without fixed points; the identity prints as `()`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut any = false;
        for c in self.cycles().into_iter().filter(|c| c.len() > 1) {
            any = true;
            let body: Vec<String> = c.iter().map(|x| x.to_string()).collect();
            write!(f, "({})", body.join(" "))?;
        }
        if !any {
            write!(f, "()")?;
        }
        Ok(())
    }
}

pub(crate) fn count_cycles_slice(images: &[usize]) -> usize {
    let m = images.len();
    let mut seen = vec![false; m];
    let mut count = 0;
    for start in 0..m {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = images[j];
        }
    }
    count
}

/// Cayley distance `|σ⁻¹τ|`.
pub fn distance(sigma: &Permutation, tau: &Permutation) -> Result<usize> {
    Ok(sigma.inverse().compose(tau)?.length())
}

/// True iff consecutive distances along `points` add up to the distance
/// between the endpoints.
pub fn is_geodesic(points: &[Permutation]) -> Result<bool> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints);
    }
    let mut walked = 0;
    for w in points.windows(2) {
        walked += distance(&w[0], &w[1])?;
    }
    Ok(walked == distance(&points[0], &points[points.len() - 1])?)
}

/// A partition of `m` into weakly decreasing positive parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleType {
    parts: Vec<usize>,
}

impl CycleType {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::InvalidParameters(
                "cycle type with a zero part".into(),
            ));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn degree(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Number of cycles.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// A canonical representative: consecutive blocks of the given lengths.
    pub fn representative(&self) -> Permutation {
        let m = self.degree();
        let mut images = vec![0; m];
        let mut start = 0;
        for &len in &self.parts {
            for off in 0..len {
                images[start + off] = start + (off + 1) % len;
            }
            start += len;
        }
        Permutation { images }
    }
}

impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.parts.iter().map(|x| x.to_string()).collect();
        write!(f, "[{}]", body.join(","))
    }
}

/// All partitions of `m`, in reverse lexicographic order (`[m]` first).
pub fn partitions(m: usize) -> Vec<CycleType> {
    fn rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<CycleType>) {
        if rest == 0 {
            out.push(CycleType { parts: cur.clone() });
            return;
        }
        for part in (1..=rest.min(max)).rev() {
            cur.push(part);
            rec(rest - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, m, &mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tier {
    Top,
    Bottom,
}

/// `(position, tier)` label of `{0, .., 2p-1}`; `position` runs over `1..=p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabeledIndex {
    pub position: usize,
    pub tier: Tier,
}

impl LabeledIndex {
    pub fn to_index(self, p: usize) -> usize {
        debug_assert!((1..=p).contains(&self.position));
        match self.tier {
            Tier::Top => self.position - 1,
            Tier::Bottom => p + self.position - 1,
        }
    }

    pub fn from_index(p: usize, idx: usize) -> Self {
        if idx < p {
            Self {
                position: idx + 1,
                tier: Tier::Top,
            }
        } else {
            Self {
                position: idx - p + 1,
                tier: Tier::Bottom,
            }
        }
    }
}

// `shift` is applied to the 0-based position modulo p.
fn tiered(p: usize, top_shift: isize, bottom_shift: isize) -> Permutation {
    let p_i = p as isize;
    let mut images = vec![0; 2 * p];
    for i in 0..p_i {
        images[i as usize] = (i + top_shift).rem_euclid(p_i) as usize;
        images[(p_i + i) as usize] = (p_i + (i + bottom_shift).rem_euclid(p_i)) as usize;
    }
    Permutation { images }
}

/// `γ`: `i^T -> (i-1)^T`, `i^B -> (i+1)^B`, positions mod `p`.
pub fn wiring_gamma(p: usize) -> Permutation {
    tiered(p, -1, 1)
}

/// `γ̃`: `i^T -> (i+1)^T`, `i^B -> (i+1)^B`.
pub fn wiring_tilde_gamma(p: usize) -> Permutation {
    tiered(p, 1, 1)
}

/// `δ`: swaps `i^T` and `i^B`.
pub fn wiring_delta(p: usize) -> Permutation {
    let images = (0..2 * p)
        .map(|i| if i < p { i + p } else { i - p })
        .collect();
    Permutation { images }
}

/// Product of the transpositions `(i^T, i^B)` for `i` in `positions` (1-based).
pub fn pairing_product(p: usize, positions: &[usize]) -> Permutation {
    let mut images: Vec<usize> = (0..2 * p).collect();
    for &i in positions {
        let (t, b) = (i - 1, p + i - 1);
        images[t] = b;
        images[b] = t;
    }
    Permutation { images }
}

/// One point `id -> α -> β -> δ` of the geodesic family, with `A ⊆ B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeodesicPair {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub alpha: Permutation,
    pub beta: Permutation,
}

/// Iterates over all `3^p` pairs `A ⊆ B ⊆ {1..p}`.
pub fn enumerate_geodesic_pairs(p: usize) -> GeodesicPairs {
    GeodesicPairs {
        p,
        next: 0,
        total: 3usize.pow(p as u32),
    }
}

pub struct GeodesicPairs {
    p: usize,
    next: usize,
    total: usize,
}

impl Iterator for GeodesicPairs {
    type Item = GeodesicPair;

    fn next(&mut self) -> Option<GeodesicPair> {
        if self.next >= self.total {
            return None;
        }
        // base-3 digit per position: 0 = outside B, 1 = in B \ A, 2 = in A
        let mut code = self.next;
        self.next += 1;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for i in 1..=self.p {
            match code % 3 {
                2 => {
                    a.push(i);
                    b.push(i);
                }
                1 => b.push(i),
                _ => {}
            }
            code /= 3;
        }
        let alpha = pairing_product(self.p, &a);
        let beta = pairing_product(self.p, &b);
        Some(GeodesicPair { a, b, alpha, beta })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.total - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for GeodesicPairs {}

/// All `m!` permutations in lexicographic order, for `m <= DEFAULT_GROUP_BOUND`.
pub fn enumerate_group(m: usize) -> Result<GroupIter> {
    enumerate_group_bounded(m, DEFAULT_GROUP_BOUND)
}

pub fn enumerate_group_bounded(m: usize, bound: usize) -> Result<GroupIter> {
    if m > bound {
        return Err(Error::BoundExceeded { degree: m, bound });
    }
    Ok(GroupIter {
        current: Some((0..m).collect()),
    })
}

pub struct GroupIter {
    current: Option<Vec<usize>>,
}

impl Iterator for GroupIter {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let cur = self.current.take()?;
        let mut succ = cur.clone();
        if next_lexicographic(&mut succ) {
            self.current = Some(succ);
        }
        Some(Permutation { images: cur })
    }
}

fn next_lexicographic(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn s(m: usize) -> Vec<Permutation> {
        enumerate_group(m).unwrap().collect()
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
        assert!(Permutation::new(vec![2, 0, 1]).is_ok());
    }

    #[test]
    fn composition_laws() {
        let id = Permutation::identity(3);
        let t = Permutation::transposition(2, 0, 1).unwrap();
        assert!(t.compose(&t).unwrap().is_identity());
        for g in s(3) {
            assert_eq!(id.compose(&g).unwrap(), g);
            assert!(g.compose(&g.inverse()).unwrap().is_identity());
        }
        assert!(matches!(t.compose(&id), Err(Error::DegreeMismatch(2, 3))));
    }

    #[test]
    fn three_cycle_times_transposition() {
        // multiplication table of S_3 worked out by hand: (0 1 2)(0 1) = (0 2)
        let c = Permutation::from_cycles(3, &[vec![0, 1, 2]]).unwrap();
        let t = Permutation::transposition(3, 0, 1).unwrap();
        let prod = c.compose(&t).unwrap();
        assert_eq!(prod.images(), &[2, 1, 0]);
        assert_eq!(prod.apply(1), 1);
    }

    #[test]
    fn cycle_counts() {
        assert_eq!(Permutation::identity(3).count_cycles(), 3);
        let full = Permutation::from_cycles(4, &[vec![0, 1, 2, 3]]).unwrap();
        assert_eq!(full.count_cycles(), 1);
        assert_eq!(full.length(), 3);
        assert_eq!(wiring_delta(3).count_cycles(), 3);
        assert_eq!(Permutation::transposition(5, 1, 4).unwrap().length(), 1);
    }

    #[test]
    fn wirings_have_expected_shape() {
        for p in 1..=6 {
            let g = wiring_gamma(p);
            let gt = wiring_tilde_gamma(p);
            let d = wiring_delta(p);
            assert_eq!(g.count_cycles(), 2);
            assert_eq!(gt.count_cycles(), 2);
            assert_eq!(d.count_cycles(), p);
            assert_eq!(d.length(), p);
            let top = |i| {
                LabeledIndex {
                    position: i,
                    tier: Tier::Top,
                }
                .to_index(p)
            };
            let bot = |i| {
                LabeledIndex {
                    position: i,
                    tier: Tier::Bottom,
                }
                .to_index(p)
            };
            for i in 1..=p {
                let prev = if i == 1 { p } else { i - 1 };
                let next = if i == p { 1 } else { i + 1 };
                assert_eq!(g.apply(top(i)), top(prev));
                assert_eq!(g.apply(bot(i)), bot(next));
                assert_eq!(gt.apply(top(i)), top(next));
                assert_eq!(gt.apply(bot(i)), bot(next));
                assert_eq!(d.apply(top(i)), bot(i));
            }
        }
    }

    #[test]
    fn labeled_index_bijection() {
        let p = 4;
        for idx in 0..2 * p {
            assert_eq!(LabeledIndex::from_index(p, idx).to_index(p), idx);
        }
        assert_eq!(
            LabeledIndex {
                position: 1,
                tier: Tier::Bottom
            }
            .to_index(p),
            4
        );
    }

    #[test]
    fn group_enumeration() {
        assert_eq!(s(3).len(), 6);
        assert_eq!(s(4).len(), 24);
        let mut uniq = s(5);
        uniq.dedup();
        assert_eq!(uniq.len(), 120);
        let mut classes: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for g in s(4) {
            *classes.entry(g.cycle_type().parts().to_vec()).or_default() += 1;
        }
        let expected: BTreeMap<Vec<usize>, usize> = [
            (vec![1, 1, 1, 1], 1),
            (vec![2, 1, 1], 6),
            (vec![2, 2], 3),
            (vec![3, 1], 8),
            (vec![4], 6),
        ]
        .into_iter()
        .collect();
        assert_eq!(classes, expected);
        assert!(matches!(
            enumerate_group(9),
            Err(Error::BoundExceeded { .. })
        ));
    }

    #[test]
    fn partitions_of_small_integers() {
        let counts: Vec<usize> = (1..=8).map(|m| partitions(m).len()).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 7, 11, 15, 22]);
        for lam in partitions(6) {
            assert_eq!(lam.representative().cycle_type(), lam);
        }
    }

    #[test]
    fn metric_axioms_on_s4() {
        let g = s(4);
        for a in &g {
            for b in &g {
                let dab = distance(a, b).unwrap();
                assert_eq!(dab, distance(b, a).unwrap());
                assert_eq!(dab == 0, a == b);
                for c in &g {
                    let dac = distance(a, c).unwrap();
                    let dcb = distance(c, b).unwrap();
                    assert!(dab <= dac + dcb);
                    // parity
                    assert_eq!(
                        (dac + distance(a, b).unwrap()) % 2,
                        distance(c, b).unwrap() % 2
                    );
                    // bi-invariance
                    let ca = c.compose(a).unwrap();
                    let cb = c.compose(b).unwrap();
                    assert_eq!(distance(&ca, &cb).unwrap(), dab);
                    let ac = a.compose(c).unwrap();
                    let bc = b.compose(c).unwrap();
                    assert_eq!(distance(&ac, &bc).unwrap(), dab);
                }
            }
        }
    }

    #[test]
    fn diameter_is_p_minus_one() {
        for p in 1..=5 {
            let id = Permutation::identity(p);
            let diam = s(p)
                .iter()
                .map(|g| distance(&id, g).unwrap())
                .max()
                .unwrap();
            assert_eq!(diam, p - 1);
        }
    }

    #[test]
    fn geodesic_predicate() {
        let id = Permutation::identity(4);
        let d2 = wiring_delta(2);
        let sigma = Permutation::from_cycles(4, &[vec![0, 2, 3]]).unwrap();
        assert!(is_geodesic(&[id.clone(), sigma.clone(), sigma]).unwrap());
        assert!(!is_geodesic(&[id.clone(), d2, id.clone()]).unwrap());
        assert_eq!(is_geodesic(&[id]), Err(Error::TooFewPoints));
    }

    #[test]
    fn geodesic_family_sizes_and_property() {
        assert_eq!(enumerate_geodesic_pairs(1).count(), 3);
        assert_eq!(enumerate_geodesic_pairs(2).count(), 9);
        for p in 1..=5 {
            assert_eq!(enumerate_geodesic_pairs(p).count(), 3usize.pow(p as u32));
        }
        for p in 1..=4 {
            let id = Permutation::identity(2 * p);
            let delta = wiring_delta(p);
            for pair in enumerate_geodesic_pairs(p) {
                assert!(pair.a.iter().all(|x| pair.b.contains(x)));
                let path = [
                    id.clone(),
                    pair.alpha.clone(),
                    pair.beta.clone(),
                    delta.clone(),
                ];
                assert!(is_geodesic(&path).unwrap());
                let total = pair.alpha.length()
                    + distance(&pair.alpha, &pair.beta).unwrap()
                    + distance(&pair.beta, &delta).unwrap();
                assert_eq!(total, p);
            }
        }
    }

    #[test]
    fn loop_counts_on_geodesic_pairs() {
        for p in 1..=4 {
            let gamma_inv = wiring_gamma(p).inverse();
            let delta = wiring_delta(p);
            for pair in enumerate_geodesic_pairs(p) {
                let loops = gamma_inv.compose(&pair.alpha).unwrap().count_cycles();
                let expected = if pair.a.is_empty() { 2 } else { pair.a.len() };
                assert_eq!(loops, expected, "p={p} A={:?}", pair.a);
                assert_eq!(
                    delta.compose(&pair.beta).unwrap().count_cycles(),
                    p + pair.b.len()
                );
                assert_eq!(
                    distance(&pair.alpha, &pair.beta).unwrap(),
                    pair.b.len() - pair.a.len()
                );
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn perm(max: usize) -> impl Strategy<Value = Permutation> {
            (1..=max)
                .prop_flat_map(|m| Just((0..m).collect::<Vec<_>>()).prop_shuffle())
                .prop_map(|v| Permutation::new(v).unwrap())
        }

        fn pair(max: usize) -> impl Strategy<Value = (Permutation, Permutation)> {
            (1..=max)
                .prop_flat_map(|m| {
                    let v = Just((0..m).collect::<Vec<_>>());
                    (v.clone().prop_shuffle(), v.prop_shuffle())
                })
                .prop_map(|(a, b)| (Permutation::new(a).unwrap(), Permutation::new(b).unwrap()))
        }

        proptest! {
            #[test]
            fn inverse_cancels(p in perm(9)) {
                prop_assert!(p.compose(&p.inverse()).unwrap().is_identity());
                prop_assert!(p.inverse().compose(&p).unwrap().is_identity());
            }

            #[test]
            fn length_counts_cycles(p in perm(9)) {
                prop_assert_eq!(p.length() + p.count_cycles(), p.degree());
                prop_assert_eq!(p.cycle_type().degree(), p.degree());
                prop_assert_eq!(p.cycle_type().len(), p.count_cycles());
            }

            #[test]
            fn cycle_type_is_conjugation_invariant((p, q) in pair(8)) {
                let conj = q.inverse().compose(&p).unwrap().compose(&q).unwrap();
                prop_assert_eq!(conj.cycle_type(), p.cycle_type());
                prop_assert_eq!(p.cycle_type().representative().cycle_type(), p.cycle_type());
            }

            #[test]
            fn distance_is_a_metric((a, b) in pair(8)) {
                let id = Permutation::identity(a.degree());
                prop_assert_eq!(distance(&a, &b).unwrap(), distance(&b, &a).unwrap());
                prop_assert_eq!(distance(&id, &a).unwrap(), a.length());
                prop_assert!(distance(&a, &b).unwrap() <= a.length() + b.length());
                prop_assert_eq!(distance(&a, &a).unwrap(), 0);
            }

            #[test]
            fn cycles_roundtrip(p in perm(9)) {
                let rebuilt = Permutation::from_cycles(p.degree(), &p.cycles()).unwrap();
                prop_assert_eq!(rebuilt, p);
            }
        }
    }
}
