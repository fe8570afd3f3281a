//! Set partitions of `[d]` and their crossing statistics.
//!
//! Ground-set elements are stored 0-based. Everything that is printed or
//! parsed from user input is 1-based; use [`Partition::from_one_based`] and
//! the `Display` impls for that boundary.

use std::fmt;

use crate::error::{Error, Result};

/// Enumeration caps. Pair partitions grow like `(d-1)!!`, bipartite pairings
/// like `s!` and general set partitions like the Bell numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub pairings: usize,
    pub bipartite: usize,
    pub set_partitions: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            pairings: 16,
            bipartite: 8,
            set_partitions: 10,
        }
    }
}

fn check_cap(what: &'static str, requested: usize, cap: usize) -> Result<()> {
    if requested > cap {
        return Err(Error::CapExceeded {
            what,
            requested,
            cap,
        });
    }
    Ok(())
}

/// A partition of `{0, .., d-1}`. Blocks are sorted ascending and ordered by
/// their least element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    d: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a partition from 0-based blocks, normalizing the order.
    pub fn new(d: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; d];
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .filter(|b| !b.is_empty())
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        for block in &blocks {
            for &x in block {
                if x >= d {
                    return Err(Error::InvalidPartition(format!(
                        "element {} outside ground set of size {d}",
                        x + 1
                    )));
                }
                if seen[x] {
                    return Err(Error::InvalidPartition(format!(
                        "element {} appears twice",
                        x + 1
                    )));
                }
                seen[x] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!(
                "element {} is not covered",
                missing + 1
            )));
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Partition { d, blocks })
    }

    pub fn from_one_based(d: usize, blocks: &[&[usize]]) -> Result<Self> {
        let mut converted = Vec::with_capacity(blocks.len());
        for block in blocks {
            let mut b = Vec::with_capacity(block.len());
            for &x in *block {
                if x == 0 {
                    return Err(Error::InvalidPartition("index 0 in 1-based input".into()));
                }
                b.push(x - 1);
            }
            converted.push(b);
        }
        Partition::new(d, converted)
    }

    /// Builds a partition from a block-label vector: `k` and `l` share a block
    /// iff `labels[k] == labels[l]`.
    pub fn from_labels<T: PartialEq>(labels: &[T]) -> Self {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut reps: Vec<usize> = Vec::new();
        for (pos, label) in labels.iter().enumerate() {
            match reps.iter().position(|&r| labels[r] == *label) {
                Some(b) => blocks[b].push(pos),
                None => {
                    reps.push(pos);
                    blocks.push(vec![pos]);
                }
            }
        }
        Partition {
            d: labels.len(),
            blocks,
        }
    }

    pub fn ground_size(&self) -> usize {
        self.d
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Block index of every element.
    pub fn block_labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.d];
        for (b, block) in self.blocks.iter().enumerate() {
            for &x in block {
                labels[x] = b;
            }
        }
        labels
    }

    /// `self <= other`: every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &Partition) -> Result<bool> {
        if self.d != other.d {
            return Err(Error::GroundSetMismatch(self.d, other.d));
        }
        let outer = other.block_labels();
        Ok(self
            .blocks
            .iter()
            .all(|b| b.iter().all(|&x| outer[x] == outer[b[0]])))
    }

    /// Coarsest common refinement.
    pub fn meet(&self, other: &Partition) -> Result<Partition> {
        if self.d != other.d {
            return Err(Error::GroundSetMismatch(self.d, other.d));
        }
        let a = self.block_labels();
        let b = other.block_labels();
        let joint: Vec<(usize, usize)> = a.into_iter().zip(b).collect();
        Ok(Partition::from_labels(&joint))
    }

    pub fn is_pair_partition(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 2)
    }

    pub fn is_singleton_pair(&self) -> bool {
        self.blocks.iter().all(|b| b.len() <= 2)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, x) in block.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", x + 1)?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// `σ(i)`: positions `k`, `l` share a block iff `i[k] == i[l]`.
pub fn partition_of_vector(labels: &[usize]) -> Result<Partition> {
    if labels.is_empty() {
        return Err(Error::EmptyVector);
    }
    Ok(Partition::from_labels(labels))
}

/// A pair partition; `pairs[k] = (e_k, z_k)` with `e_k < z_k`, sorted by `e_k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairPartition {
    d: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairPartition {
    pub fn new(d: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if d % 2 == 1 {
            return Err(Error::OddGroundSet(d));
        }
        let sp = SingletonPairPartition::new(d, Vec::new(), pairs)?;
        Ok(PairPartition {
            d,
            pairs: sp.pairs,
        })
    }

    pub fn ground_size(&self) -> usize {
        self.d
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// `I(σ)`: block-index pairs `(k, l)` with `e_k < e_l < z_k < z_l`.
    pub fn crossings(&self) -> Vec<(usize, usize)> {
        pair_crossings(&self.pairs)
    }

    pub fn is_noncrossing(&self) -> bool {
        self.crossings().is_empty()
    }

    pub fn to_partition(&self) -> Partition {
        Partition {
            d: self.d,
            blocks: self.pairs.iter().map(|&(e, z)| vec![e, z]).collect(),
        }
    }
}

impl fmt::Display for PairPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_partition().fmt(f)
    }
}

fn pair_crossings(pairs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (k, &(ek, zk)) in pairs.iter().enumerate() {
        for (l, &(el, zl)) in pairs.iter().enumerate().skip(k + 1) {
            if ek < el && el < zk && zk < zl {
                out.push((k, l));
            }
        }
    }
    out
}

/// An element of `P_{1,2}(d)`: singletons plus pair blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SingletonPairPartition {
    d: usize,
    singletons: Vec<usize>,
    pairs: Vec<(usize, usize)>,
}

/// Crossing sets of a singleton-pair partition.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CrossingSets12 {
    /// Pair-pair crossings, as indices into `pairs()`.
    pub pair_pair: Vec<(usize, usize)>,
    /// `(pair index, singleton position)` with the singleton strictly inside the pair.
    pub pair_singleton: Vec<(usize, usize)>,
}

impl SingletonPairPartition {
    pub fn new(d: usize, mut singletons: Vec<usize>, pairs: Vec<(usize, usize)>) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> = pairs
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        pairs.sort_unstable();
        singletons.sort_unstable();
        let mut seen = vec![false; d];
        let all = singletons
            .iter()
            .copied()
            .chain(pairs.iter().flat_map(|&(e, z)| [e, z]));
        for x in all {
            if x >= d || seen[x] {
                return Err(Error::InvalidPartition(format!(
                    "element {} repeated or outside [{d}]",
                    x + 1
                )));
            }
            seen[x] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!(
                "element {} is not covered",
                missing + 1
            )));
        }
        Ok(SingletonPairPartition {
            d,
            singletons,
            pairs,
        })
    }

    /// Converts a partition whose blocks all have size one or two.
    pub fn from_partition(p: &Partition) -> Result<Self> {
        let mut singletons = Vec::new();
        let mut pairs = Vec::new();
        for b in p.blocks() {
            match b.len() {
                1 => singletons.push(b[0]),
                2 => pairs.push((b[0], b[1])),
                n => {
                    return Err(Error::InvalidPartition(format!(
                        "block of size {n} in a singleton-pair partition"
                    )))
                }
            }
        }
        SingletonPairPartition::new(p.ground_size(), singletons, pairs)
    }

    pub fn ground_size(&self) -> usize {
        self.d
    }

    pub fn singletons(&self) -> &[usize] {
        &self.singletons
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn is_all_singletons(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn crossing_sets(&self) -> CrossingSets12 {
        let pair_pair = pair_crossings(&self.pairs);
        let mut pair_singleton = Vec::new();
        for (r, &(e, z)) in self.pairs.iter().enumerate() {
            for &t in &self.singletons {
                if e < t && t < z {
                    pair_singleton.push((r, t));
                }
            }
        }
        CrossingSets12 {
            pair_pair,
            pair_singleton,
        }
    }

    pub fn to_partition(&self) -> Partition {
        let mut blocks: Vec<Vec<usize>> = self.singletons.iter().map(|&s| vec![s]).collect();
        blocks.extend(self.pairs.iter().map(|&(e, z)| vec![e, z]));
        blocks.sort_by_key(|b| b[0]);
        Partition { d: self.d, blocks }
    }
}

impl fmt::Display for SingletonPairPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_partition().fmt(f)
    }
}

/// `(I_p, I_sp)` of a singleton-pair partition.
pub fn crossing_sets_12(sigma: &SingletonPairPartition) -> CrossingSets12 {
    sigma.crossing_sets()
}

/// A perfect matching between `{1..s}` and `{1~..s~}`; left `k` is matched
/// with right `matching[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BipartitePairing {
    matching: Vec<usize>,
}

impl BipartitePairing {
    pub fn new(matching: Vec<usize>) -> Result<Self> {
        let s = matching.len();
        let mut seen = vec![false; s];
        for &m in &matching {
            if m >= s || seen[m] {
                return Err(Error::InvalidPartition(format!(
                    "matching {matching:?} is not a bijection"
                )));
            }
            seen[m] = true;
        }
        Ok(BipartitePairing { matching })
    }

    pub fn identity(s: usize) -> Self {
        BipartitePairing {
            matching: (0..s).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.matching.len()
    }

    pub fn matching(&self) -> &[usize] {
        &self.matching
    }

    /// Bipartite crossings, oriented so that their number is the inversion
    /// count of the matching permutation: left pairs `k < l` cross iff
    /// `matching[k] > matching[l]`.
    pub fn crossings(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for k in 0..self.matching.len() {
            for l in k + 1..self.matching.len() {
                if self.matching[k] > self.matching[l] {
                    out.push((k, l));
                }
            }
        }
        out
    }
}

pub fn bipartite_crossings(pairing: &BipartitePairing) -> Vec<(usize, usize)> {
    pairing.crossings()
}

/// All pair partitions of `[d]`, in lexicographic order of their pair lists.
pub fn enumerate_pair_partitions(d: usize, caps: &Caps) -> Result<Vec<PairPartition>> {
    if d % 2 == 1 {
        return Err(Error::OddGroundSet(d));
    }
    check_cap("pair-partition ground set", d, caps.pairings)?;
    let mut out = Vec::new();
    for_each_pairing(d, &|_, _| true, &mut |pairs| {
        out.push(PairPartition {
            d,
            pairs: pairs.to_vec(),
        })
    });
    Ok(out)
}

/// Visits every pair partition of `[d]` whose pairs all satisfy `allowed`.
/// Pairs are produced sorted by opener; pruning happens as soon as a pair is
/// rejected.
pub fn for_each_pairing(
    d: usize,
    allowed: &dyn Fn(usize, usize) -> bool,
    visit: &mut dyn FnMut(&[(usize, usize)]),
) {
    if d % 2 == 1 {
        return;
    }
    let mut used = vec![false; d];
    let mut pairs = Vec::with_capacity(d / 2);
    pairing_rec(d, 0, &mut used, &mut pairs, allowed, visit);
}

fn pairing_rec(
    d: usize,
    start: usize,
    used: &mut [bool],
    pairs: &mut Vec<(usize, usize)>,
    allowed: &dyn Fn(usize, usize) -> bool,
    visit: &mut dyn FnMut(&[(usize, usize)]),
) {
    let Some(first) = (start..d).find(|&x| !used[x]) else {
        visit(pairs);
        return;
    };
    used[first] = true;
    for partner in first + 1..d {
        if used[partner] || !allowed(first, partner) {
            continue;
        }
        used[partner] = true;
        pairs.push((first, partner));
        pairing_rec(d, first + 1, used, pairs, allowed, visit);
        pairs.pop();
        used[partner] = false;
    }
    used[first] = false;
}

/// All of `P_{1,2}(d)`.
pub fn enumerate_singleton_pair_partitions(
    d: usize,
    caps: &Caps,
) -> Result<Vec<SingletonPairPartition>> {
    check_cap("singleton-pair ground set", d, caps.pairings)?;
    let mut out = Vec::new();
    for_each_singleton_pairing(d, &|_, _| true, &mut |singles, pairs| {
        out.push(SingletonPairPartition {
            d,
            singletons: singles.to_vec(),
            pairs: pairs.to_vec(),
        })
    });
    Ok(out)
}

/// Visits every element of `P_{1,2}(d)` whose pairs satisfy `allowed`.
pub fn for_each_singleton_pairing(
    d: usize,
    allowed: &dyn Fn(usize, usize) -> bool,
    visit: &mut dyn FnMut(&[usize], &[(usize, usize)]),
) {
    let mut used = vec![false; d];
    let mut singles = Vec::new();
    let mut pairs = Vec::new();
    sp_rec(d, 0, &mut used, &mut singles, &mut pairs, allowed, visit);
}

fn sp_rec(
    d: usize,
    start: usize,
    used: &mut [bool],
    singles: &mut Vec<usize>,
    pairs: &mut Vec<(usize, usize)>,
    allowed: &dyn Fn(usize, usize) -> bool,
    visit: &mut dyn FnMut(&[usize], &[(usize, usize)]),
) {
    let Some(first) = (start..d).find(|&x| !used[x]) else {
        visit(singles, pairs);
        return;
    };
    used[first] = true;
    singles.push(first);
    sp_rec(d, first + 1, used, singles, pairs, allowed, visit);
    singles.pop();
    for partner in first + 1..d {
        if used[partner] || !allowed(first, partner) {
            continue;
        }
        used[partner] = true;
        pairs.push((first, partner));
        sp_rec(d, first + 1, used, singles, pairs, allowed, visit);
        pairs.pop();
        used[partner] = false;
    }
    used[first] = false;
}

/// All `s!` bipartite pairings, in lexicographic order of the matching.
pub fn enumerate_bipartite_pairings(s: usize, caps: &Caps) -> Result<Vec<BipartitePairing>> {
    check_cap("bipartite pairing size", s, caps.bipartite)?;
    let mut out = Vec::new();
    for_each_matching(s, &|_, _| true, &mut |m| {
        out.push(BipartitePairing {
            matching: m.to_vec(),
        })
    });
    Ok(out)
}

/// Visits every permutation `m` of `[s]` with `allowed(k, m[k])` for all `k`.
pub fn for_each_matching(
    s: usize,
    allowed: &dyn Fn(usize, usize) -> bool,
    visit: &mut dyn FnMut(&[usize]),
) {
    let mut used = vec![false; s];
    let mut current = Vec::with_capacity(s);
    matching_rec(s, &mut used, &mut current, allowed, visit);
}

fn matching_rec(
    s: usize,
    used: &mut [bool],
    current: &mut Vec<usize>,
    allowed: &dyn Fn(usize, usize) -> bool,
    visit: &mut dyn FnMut(&[usize]),
) {
    let k = current.len();
    if k == s {
        visit(current);
        return;
    }
    for r in 0..s {
        if used[r] || !allowed(k, r) {
            continue;
        }
        used[r] = true;
        current.push(r);
        matching_rec(s, used, current, allowed, visit);
        current.pop();
        used[r] = false;
    }
}

/// All set partitions of `[d]` via restricted growth strings.
pub fn enumerate_set_partitions(d: usize, caps: &Caps) -> Result<Vec<Partition>> {
    check_cap("set-partition ground set", d, caps.set_partitions)?;
    let mut out = Vec::new();
    let mut rgs = vec![0usize; d];
    rgs_rec(&mut rgs, 0, 0, &mut out);
    Ok(out)
}

fn rgs_rec(rgs: &mut [usize], pos: usize, max_used: usize, out: &mut Vec<Partition>) {
    if pos == rgs.len() {
        out.push(Partition::from_labels(rgs));
        return;
    }
    let limit = if pos == 0 { 0 } else { max_used + 1 };
    for v in 0..=limit {
        rgs[pos] = v;
        rgs_rec(rgs, pos + 1, max_used.max(v), out);
    }
}

/// `(d-1)!!` for even `d`, zero for odd `d`.
pub fn double_factorial_odd(d: usize) -> u128 {
    if d % 2 == 1 {
        return 0;
    }
    (1..d).step_by(2).map(|x| x as u128).product()
}

/// `m (m-1) ... (m-k+1)`.
pub fn falling_factorial(m: usize, k: usize) -> u128 {
    if k > m {
        return 0;
    }
    (0..k).map(|j| (m - j) as u128).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn caps() -> Caps {
        Caps::default()
    }

    #[test]
    fn pair_partition_counts() {
        assert_eq!(enumerate_pair_partitions(0, &caps()).unwrap().len(), 1);
        assert_eq!(enumerate_pair_partitions(2, &caps()).unwrap().len(), 1);
        assert_eq!(enumerate_pair_partitions(6, &caps()).unwrap().len(), 15);
        for d in (0..=12).step_by(2) {
            let n = enumerate_pair_partitions(d, &caps()).unwrap().len() as u128;
            assert_eq!(n, double_factorial_odd(d), "d = {d}");
        }
    }

    #[test]
    fn pair_partitions_of_four() {
        let all = enumerate_pair_partitions(4, &caps()).unwrap();
        let lists: Vec<_> = all.iter().map(|p| p.pairs().to_vec()).collect();
        assert_eq!(
            lists,
            vec![
                vec![(0, 1), (2, 3)],
                vec![(0, 2), (1, 3)],
                vec![(0, 3), (1, 2)]
            ]
        );
    }

    #[test]
    fn odd_and_capped_pair_partitions_fail() {
        assert_eq!(
            enumerate_pair_partitions(3, &caps()),
            Err(Error::OddGroundSet(3))
        );
        assert!(matches!(
            enumerate_pair_partitions(18, &caps()),
            Err(Error::CapExceeded { .. })
        ));
        let small = Caps {
            pairings: 4,
            ..caps()
        };
        assert!(enumerate_pair_partitions(6, &small).is_err());
    }

    #[test]
    fn involution_numbers() {
        let expected = [1, 1, 2, 4, 10, 26, 76];
        for (d, &e) in expected.iter().enumerate() {
            assert_eq!(
                enumerate_singleton_pair_partitions(d, &caps()).unwrap().len(),
                e
            );
        }
        let one = enumerate_singleton_pair_partitions(1, &caps()).unwrap();
        assert_eq!(one[0].singletons(), &[0]);
        assert!(enumerate_singleton_pair_partitions(17, &caps()).is_err());
    }

    #[test]
    fn partition_of_vector_examples() {
        let p = partition_of_vector(&[1, 2, 1]).unwrap();
        assert_eq!(p, Partition::from_one_based(3, &[&[1, 3], &[2]]).unwrap());
        let p = partition_of_vector(&[5, 5, 5]).unwrap();
        assert_eq!(p.blocks(), &[vec![0, 1, 2]]);
        let p = partition_of_vector(&[1, 2, 3]).unwrap();
        assert_eq!(p.num_blocks(), 3);
        assert_eq!(partition_of_vector(&[]), Err(Error::EmptyVector));
        assert_eq!(p.to_string(), "{{1},{2},{3}}");
    }

    #[test]
    fn refines_examples() {
        let fine = Partition::from_one_based(2, &[&[1], &[2]]).unwrap();
        let coarse = Partition::from_one_based(2, &[&[1, 2]]).unwrap();
        assert!(fine.refines(&coarse).unwrap());
        assert!(!coarse.refines(&fine).unwrap());
        let p = Partition::from_one_based(3, &[&[1, 3], &[2]]).unwrap();
        assert!(p.refines(&p).unwrap());
        assert!(matches!(
            p.refines(&fine),
            Err(Error::GroundSetMismatch(3, 2))
        ));
    }

    #[test]
    fn invalid_partitions_rejected() {
        assert!(Partition::from_one_based(3, &[&[1, 2]]).is_err());
        assert!(Partition::from_one_based(2, &[&[1, 2], &[2]]).is_err());
        assert!(Partition::from_one_based(2, &[&[1, 3]]).is_err());
        assert!(PairPartition::new(4, vec![(0, 1), (1, 2)]).is_err());
        assert!(BipartitePairing::new(vec![0, 0]).is_err());
    }

    #[test]
    fn crossing_examples() {
        let a = PairPartition::new(4, vec![(0, 1), (2, 3)]).unwrap();
        let b = PairPartition::new(4, vec![(0, 2), (1, 3)]).unwrap();
        let c = PairPartition::new(4, vec![(0, 3), (1, 2)]).unwrap();
        assert!(a.crossings().is_empty());
        assert_eq!(b.crossings(), vec![(0, 1)]);
        assert!(c.crossings().is_empty());
    }

    #[test]
    fn crossing_sets_12_examples() {
        // {{1},{2},{4},{3,5}} on d = 5
        let sigma = SingletonPairPartition::new(5, vec![0, 1, 3], vec![(2, 4)]).unwrap();
        let cs = crossing_sets_12(&sigma);
        assert!(cs.pair_pair.is_empty());
        assert_eq!(cs.pair_singleton, vec![(0, 3)]);

        let singles = SingletonPairPartition::new(3, vec![0, 1, 2], vec![]).unwrap();
        assert_eq!(crossing_sets_12(&singles), CrossingSets12::default());

        let pairs = SingletonPairPartition::new(4, vec![], vec![(0, 2), (1, 3)]).unwrap();
        let cs = crossing_sets_12(&pairs);
        assert_eq!(cs.pair_pair, vec![(0, 1)]);
        assert!(cs.pair_singleton.is_empty());
    }

    #[test]
    fn bipartite_examples() {
        assert_eq!(enumerate_bipartite_pairings(1, &caps()).unwrap().len(), 1);
        assert_eq!(enumerate_bipartite_pairings(2, &caps()).unwrap().len(), 2);
        assert_eq!(enumerate_bipartite_pairings(3, &caps()).unwrap().len(), 6);
        assert!(enumerate_bipartite_pairings(9, &caps()).is_err());
        for s in 0..6 {
            assert!(BipartitePairing::identity(s).crossings().is_empty());
        }
        let swap = BipartitePairing::new(vec![1, 0]).unwrap();
        assert_eq!(swap.crossings().len(), 1);
        let rev = BipartitePairing::new(vec![2, 1, 0]).unwrap();
        assert_eq!(bipartite_crossings(&rev).len(), 3);
    }

    #[test]
    fn set_partitions_are_bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203];
        for (d, &b) in bell.iter().enumerate() {
            assert_eq!(enumerate_set_partitions(d, &caps()).unwrap().len(), b);
        }
    }

    #[test]
    fn falling_factorials() {
        assert_eq!(falling_factorial(8, 0), 1);
        assert_eq!(falling_factorial(8, 3), 336);
        assert_eq!(falling_factorial(2, 3), 0);
    }
}
