//! Nearest-neighbor and m-nearest-neighbors prediction over a sample set.
//!
//! Distance ties are detected by exact floating-point equality of the
//! distance keys; there is no tolerance anywhere in this module. Where a
//! rule leaves a choice open (equidistant nearest samples, several most
//! ambiguous neighbor sets, several modes) the choice is uniform and drawn
//! from the caller's random stream, and a draw happens only when there is
//! more than one option.

use rand::Rng;

use crate::domain::{dist_key, Label, Point, TrueFunction};
use crate::error::{Error, Result};
use crate::rng::{mix64, RngState};

/// A labeled sample; `index` is its 1-based insertion position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledSample {
    pub point: Point,
    pub label: Label,
    pub index: usize,
}

/// Append-only ordered sample set Z_n.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleSet {
    samples: Vec<LabeledSample>,
    checksum: u64,
}

impl SampleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Labels each point with `truth`, in order.
    pub fn from_points(truth: &TrueFunction, points: &[Point]) -> Result<Self> {
        let mut set = Self::new();
        for p in points {
            set.push(*p, truth.label_of(p)?)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, point: Point, label: Label) -> Result<&LabeledSample> {
        if let Some(first) = self.samples.first() {
            if first.point.dim() != point.dim() {
                return Err(Error::DimensionMismatch(first.point.dim(), point.dim()));
            }
        }
        let index = self.samples.len() + 1;
        self.checksum = checksum_step(self.checksum, &point, label);
        self.samples.push(LabeledSample {
            point,
            label,
            index,
        });
        Ok(self.samples.last().unwrap())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    /// Sample with 1-based index `index`.
    pub fn get(&self, index: usize) -> Option<&LabeledSample> {
        index.checked_sub(1).and_then(|i| self.samples.get(i))
    }

    pub fn label(&self, index: usize) -> Label {
        self.samples[index - 1].label
    }

    /// Running hash of every pushed (point, label); identifies a prefix.
    pub fn checksum(&self) -> u64 {
        self.checksum
    }

    /// Checksum the set had when it held `n` samples.
    pub fn prefix_checksum(&self, n: usize) -> u64 {
        self.samples[..n.min(self.len())]
            .iter()
            .fold(0, |acc, s| checksum_step(acc, &s.point, s.label))
    }

    /// The first `n` samples (Z_n).
    pub fn prefix(&self, n: usize) -> SampleSet {
        let mut out = SampleSet::new();
        for s in &self.samples[..n.min(self.len())] {
            out.push(s.point, s.label)
                .expect("dimensions already consistent");
        }
        out
    }

    /// A sample whose coordinates equal `x` exactly, if any.
    pub fn find_exact(&self, x: &Point) -> Option<&LabeledSample> {
        self.samples.iter().find(|s| s.point == *x)
    }

    fn check_query(&self, x: &Point) -> Result<()> {
        match self.samples.first() {
            None => Err(Error::EmptySampleSet),
            Some(s) if s.point.dim() != x.dim() => {
                Err(Error::DimensionMismatch(x.dim(), s.point.dim()))
            }
            Some(_) => Ok(()),
        }
    }
}

fn checksum_step(acc: u64, point: &Point, label: Label) -> u64 {
    mix64(
        acc ^ mix64(point.x().to_bits())
            ^ mix64(point.y().to_bits()).rotate_left(17)
            ^ ((label.0 as u64) << 48),
    )
}

/// Indices of every sample at minimum distance from `x`.
pub fn nearest_indices(x: &Point, z: &SampleSet) -> Result<Vec<usize>> {
    z.check_query(x)?;
    let mut best = f64::INFINITY;
    let mut out = Vec::new();
    for s in z.samples() {
        let k = dist_key(x, &s.point);
        if k < best {
            best = k;
            out.clear();
            out.push(s.index);
        } else if k == best {
            out.push(s.index);
        }
    }
    Ok(out)
}

fn choose<T: Copy>(items: &[T], rng: &mut RngState) -> T {
    if items.len() == 1 {
        items[0]
    } else {
        items[rng.gen_range(0..items.len())]
    }
}

/// Nearest neighbor rule; equidistant nearest samples are chosen uniformly.
pub fn predict_nn(x: &Point, z: &SampleSet, rng: &mut RngState) -> Result<Label> {
    let nearest = nearest_indices(x, z)?;
    Ok(z.label(choose(&nearest, rng)))
}

/// Structure of the family of K-sets closest to a point: every member is
/// `prefix` plus `free_slots` elements of `tie_group`.
///
/// When the boundary tie group fits exactly into the free slots it is
/// folded into the prefix, so a unique K-nearest set always has an empty
/// tie group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TieFamily {
    /// samples strictly nearer than the K-th distance
    pub prefix: Vec<usize>,
    /// samples exactly at the K-th distance
    pub tie_group: Vec<usize>,
    pub free_slots: usize,
}

impl TieFamily {
    pub fn set_size(&self) -> usize {
        self.prefix.len() + self.free_slots
    }

    /// Number of members, saturating.
    pub fn member_count(&self) -> u128 {
        binomial(self.tie_group.len(), self.free_slots)
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc == u128::MAX {
            break;
        }
    }
    acc
}

/// Family of K-sets of `z` minimizing distance to `x`.
pub fn k_nearest_tie_family(x: &Point, z: &SampleSet, k: usize) -> Result<TieFamily> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "neighbor count must be >= 1".into(),
        ));
    }
    z.check_query(x)?;
    if z.len() < k {
        return Err(Error::TooFewSamples {
            needed: k,
            have: z.len(),
        });
    }
    let keys: Vec<f64> = z.samples().iter().map(|s| dist_key(x, &s.point)).collect();
    let mut scratch = keys.clone();
    let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
    let kth = *kth;
    let mut prefix = Vec::with_capacity(k);
    let mut tie_group = Vec::new();
    for (i, &key) in keys.iter().enumerate() {
        if key < kth {
            prefix.push(i + 1);
        } else if key == kth {
            tie_group.push(i + 1);
        }
    }
    let mut free_slots = k - prefix.len();
    if tie_group.len() == free_slots {
        prefix.append(&mut tie_group);
        prefix.sort_unstable();
        free_slots = 0;
    }
    Ok(TieFamily {
        prefix,
        tie_group,
        free_slots,
    })
}

/// Frequency of the most common label among `labels`; 0 when empty.
pub fn mode_frequency(labels: impl IntoIterator<Item = Label>) -> usize {
    let mut counts = LabelCounts::default();
    for l in labels {
        counts.add(l);
    }
    counts.max()
}

#[derive(Default, Clone)]
struct LabelCounts(Vec<usize>);

impl LabelCounts {
    fn add(&mut self, l: Label) {
        let i = l.0 as usize;
        if self.0.len() <= i {
            self.0.resize(i + 1, 0);
        }
        self.0[i] += 1;
    }

    fn get(&self, l: Label) -> usize {
        self.0.get(l.0 as usize).copied().unwrap_or(0)
    }

    fn max(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

/// Exhaustive search is used while the family has at most this many members.
pub const ENUMERATION_CAP: u128 = 1000;

fn prefix_counts(family: &TieFamily, z: &SampleSet) -> LabelCounts {
    let mut counts = LabelCounts::default();
    for &i in &family.prefix {
        counts.add(z.label(i));
    }
    counts
}

/// Tie-group members bucketed by label, in label order.
fn tie_buckets(family: &TieFamily, z: &SampleSet) -> Vec<(Label, Vec<usize>)> {
    let mut buckets: Vec<(Label, Vec<usize>)> = Vec::new();
    for &i in &family.tie_group {
        let l = z.label(i);
        match buckets.iter_mut().find(|(bl, _)| *bl == l) {
            Some((_, v)) => v.push(i),
            None => buckets.push((l, vec![i])),
        }
    }
    buckets.sort_by_key(|(l, _)| *l);
    buckets
}

/// Smallest mode frequency over the family's members.
///
/// Filling each free slot with a label of currently lowest count minimizes
/// the final maximum count, so this is exact without enumeration.
pub fn min_mode_frequency(family: &TieFamily, z: &SampleSet) -> usize {
    let mut counts = prefix_counts(family, z);
    let mut supply: Vec<(Label, usize)> = tie_buckets(family, z)
        .into_iter()
        .map(|(l, v)| (l, v.len()))
        .collect();
    for _ in 0..family.free_slots {
        let (slot, _) = supply
            .iter()
            .enumerate()
            .filter(|(_, (_, left))| *left > 0)
            .min_by_key(|(_, (l, _))| counts.get(*l))
            .expect("tie group holds at least free_slots samples");
        let (label, left) = &mut supply[slot];
        *left -= 1;
        counts.add(*label);
    }
    counts.max()
}

/// Picks a member of `family` with minimal mode frequency ("most ambiguous").
///
/// Families of at most [`ENUMERATION_CAP`] members are enumerated and a
/// minimizer is chosen uniformly. Larger families are filled greedily: each
/// slot takes a label of lowest running count (uniform among such labels),
/// then a uniform sample of that label.
pub fn select_ambiguous_set(family: &TieFamily, z: &SampleSet, rng: &mut RngState) -> Vec<usize> {
    let mut chosen = family.prefix.clone();
    if family.free_slots == 0 {
        return chosen;
    }
    if family.member_count() <= ENUMERATION_CAP {
        let base = prefix_counts(family, z);
        let mut best = usize::MAX;
        let mut minimizers: Vec<Vec<usize>> = Vec::new();
        for_each_combination(family.tie_group.len(), family.free_slots, |combo| {
            let mut counts = base.clone();
            for &c in combo {
                counts.add(z.label(family.tie_group[c]));
            }
            let freq = counts.max();
            if freq < best {
                best = freq;
                minimizers.clear();
            }
            if freq == best {
                minimizers.push(combo.iter().map(|&c| family.tie_group[c]).collect());
            }
        });
        let pick = if minimizers.len() == 1 {
            0
        } else {
            rng.gen_range(0..minimizers.len())
        };
        chosen.extend_from_slice(&minimizers[pick]);
    } else {
        let mut counts = prefix_counts(family, z);
        let mut buckets = tie_buckets(family, z);
        for _ in 0..family.free_slots {
            let low = buckets
                .iter()
                .filter(|(_, v)| !v.is_empty())
                .map(|(l, _)| counts.get(*l))
                .min()
                .expect("tie group holds at least free_slots samples");
            let eligible: Vec<usize> = buckets
                .iter()
                .enumerate()
                .filter(|(_, (l, v))| !v.is_empty() && counts.get(*l) == low)
                .map(|(i, _)| i)
                .collect();
            let b = choose(&eligible, rng);
            let (label, members) = &mut buckets[b];
            let m = if members.len() == 1 {
                0
            } else {
                rng.gen_range(0..members.len())
            };
            chosen.push(members.swap_remove(m));
            counts.add(*label);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Calls `f` with every k-combination of 0..n in lexicographic order.
pub(crate) fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Mode of `labels` with ties broken uniformly; `None` when empty.
pub fn mode_with_ties(labels: &[Label], rng: &mut RngState) -> Option<Label> {
    let mut counts = LabelCounts::default();
    for &l in labels {
        counts.add(l);
    }
    let top = counts.max();
    if top == 0 {
        return None;
    }
    let modes: Vec<Label> = counts
        .0
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == top)
        .map(|(l, _)| Label(l as u16))
        .collect();
    Some(choose(&modes, rng))
}

/// m-nearest-neighbors rule predicting from the most ambiguous m-set.
pub fn predict_mnn(x: &Point, z: &SampleSet, m: usize, rng: &mut RngState) -> Result<Label> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    z.check_query(x)?;
    if z.len() < m {
        return Err(Error::TooFewSamples {
            needed: m,
            have: z.len(),
        });
    }
    if let Some(s) = z.find_exact(x) {
        return Ok(s.label);
    }
    let family = k_nearest_tie_family(x, z, m)?;
    let set = select_ambiguous_set(&family, z, rng);
    let labels: Vec<Label> = set.iter().map(|&i| z.label(i)).collect();
    Ok(mode_with_ties(&labels, rng).expect("m >= 1"))
}

/// Prediction rule used by evaluation and rendering.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Nn,
    Mnn(usize),
}

impl Rule {
    pub fn predict(&self, x: &Point, z: &SampleSet, rng: &mut RngState) -> Result<Label> {
        match *self {
            Rule::Nn => predict_nn(x, z, rng),
            Rule::Mnn(m) => predict_mnn(x, z, m, rng),
        }
    }

    pub fn min_samples(&self) -> usize {
        match *self {
            Rule::Nn => 1,
            Rule::Mnn(m) => m,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set_1d(xs: &[f64], labels: &[u16]) -> SampleSet {
        let mut z = SampleSet::new();
        for (&x, &l) in xs.iter().zip(labels) {
            z.push(Point::new_1d(x), Label(l)).unwrap();
        }
        z
    }

    #[test]
    fn nearest_examples() {
        let z = set_1d(&[0.2, 0.8], &[0, 1]);
        assert_eq!(nearest_indices(&Point::new_1d(0.4), &z).unwrap(), vec![1]);
        // dyadic coordinates make the tie exact in binary
        let z = set_1d(&[0.25, 0.75], &[0, 1]);
        assert_eq!(
            nearest_indices(&Point::new_1d(0.5), &z).unwrap(),
            vec![1, 2]
        );
        let z = set_1d(&[0.1, 0.2, 0.3], &[0, 0, 1]);
        assert_eq!(nearest_indices(&Point::new_1d(0.3), &z).unwrap(), vec![3]);
        assert_eq!(
            nearest_indices(&Point::new_1d(0.3), &SampleSet::new()),
            Err(Error::EmptySampleSet)
        );
    }

    #[test]
    fn duplicates_tie_at_zero() {
        let z = set_1d(&[0.5, 0.5, 0.9], &[1, 1, 0]);
        assert_eq!(
            nearest_indices(&Point::new_1d(0.5), &z).unwrap(),
            vec![1, 2]
        );
    }

    #[test]
    fn predict_nn_examples() {
        let mut rng = RngState::from_seed(1);
        let z = set_1d(&[0.3], &[4]);
        for x in [0.0, 0.5, 1.0] {
            assert_eq!(
                predict_nn(&Point::new_1d(x), &z, &mut rng).unwrap(),
                Label(4)
            );
        }
        let z = set_1d(&[0.1, 0.6, 0.9], &[0, 1, 0]);
        assert_eq!(
            predict_nn(&Point::new_1d(0.6), &z, &mut rng).unwrap(),
            Label(1)
        );
    }

    #[test]
    fn exact_tie_is_fair() {
        // binomial: p = 0.5, n = 1e4, σ of the fraction = 0.005
        let z = set_1d(&[0.25, 0.75], &[0, 1]);
        let x = Point::new_1d(0.5);
        let trials = 10_000;
        let mut zeros = 0;
        for t in 0..trials {
            let mut rng = RngState::substream(99, t);
            if predict_nn(&x, &z, &mut rng).unwrap() == Label(0) {
                zeros += 1;
            }
        }
        let frac = zeros as f64 / trials as f64;
        assert!((frac - 0.5).abs() <= 3.0 * 0.005, "fraction {frac}");
    }

    #[test]
    fn tie_family_examples() {
        let x = Point::new_1d(0.5);
        let z = set_1d(&[0.3, 0.7, 0.1], &[0, 0, 0]);
        let fam = k_nearest_tie_family(&x, &z, 2).unwrap();
        assert_eq!(fam.prefix, vec![1, 2]);
        assert!(fam.tie_group.is_empty());
        assert_eq!(fam.member_count(), 1);

        let z = set_1d(&[0.4, 0.6, 0.9], &[0, 0, 0]);
        let fam = k_nearest_tie_family(&x, &z, 2).unwrap();
        assert_eq!(fam.prefix, vec![1, 2]);
        assert_eq!(fam.member_count(), 1);

        // exact three-way tie at the boundary distance
        let z = set_1d(&[0.5, 0.25, 0.75, 0.25], &[0, 0, 1, 0]);
        let fam = k_nearest_tie_family(&x, &z, 2).unwrap();
        assert_eq!(fam.prefix, vec![1]);
        assert_eq!(fam.tie_group, vec![2, 3, 4]);
        assert_eq!(fam.free_slots, 1);
        assert_eq!(fam.member_count(), 3);

        assert!(matches!(
            k_nearest_tie_family(&x, &z, 5),
            Err(Error::TooFewSamples { needed: 5, have: 4 })
        ));
    }

    #[test]
    fn ambiguous_selection_prefers_minority() {
        // prefix label A(0); tie group {A, A, B}; one free slot.
        // choosing B gives mode frequency 1 instead of 2
        let z = set_1d(&[0.5, 0.25, 0.75, 0.25], &[0, 0, 1, 0]);
        let fam = k_nearest_tie_family(&Point::new_1d(0.5), &z, 2).unwrap();
        assert_eq!(min_mode_frequency(&fam, &z), 1);
        for seed in 0..20 {
            let mut rng = RngState::from_seed(seed);
            assert_eq!(select_ambiguous_set(&fam, &z, &mut rng), vec![1, 3]);
        }
    }

    #[test]
    fn greedy_path_matches_minimum() {
        // 40 equidistant samples, 6 free slots: C(40, 6) > cap
        let mut z = SampleSet::new();
        for i in 0..40u32 {
            let label = if i % 4 == 0 { 1 } else { 0 };
            let x = if i % 2 == 0 { 0.25 } else { 0.75 };
            z.push(Point::new_1d(x), Label(label)).unwrap();
        }
        let fam = k_nearest_tie_family(&Point::new_1d(0.5), &z, 6).unwrap();
        assert!(fam.member_count() > ENUMERATION_CAP);
        let mut rng = RngState::from_seed(5);
        let set = select_ambiguous_set(&fam, &z, &mut rng);
        assert_eq!(set.len(), 6);
        let freq = mode_frequency(set.iter().map(|&i| z.label(i)));
        assert_eq!(freq, 3);
        assert_eq!(min_mode_frequency(&fam, &z), 3);
    }

    #[test]
    fn mnn_examples() {
        let mut rng = RngState::from_seed(2);
        let z = set_1d(&[0.1, 0.2, 0.3, 0.9], &[0, 0, 1, 1]);
        assert_eq!(
            predict_mnn(&Point::new_1d(0.19), &z, 3, &mut rng).unwrap(),
            Label(0)
        );
        // x coincides with a B sample
        assert_eq!(
            predict_mnn(&Point::new_1d(0.9), &z, 3, &mut rng).unwrap(),
            Label(1)
        );
        assert!(predict_mnn(&Point::new_1d(0.5), &z, 5, &mut rng).is_err());
        assert!(predict_mnn(&Point::new_1d(0.5), &z, 0, &mut rng).is_err());
    }

    #[test]
    fn combinations_are_complete() {
        let mut seen = Vec::new();
        for_each_combination(5, 3, |c| seen.push(c.to_vec()));
        assert_eq!(seen.len(), 10);
        assert_eq!(seen[0], vec![0, 1, 2]);
        assert_eq!(seen[9], vec![2, 3, 4]);
        let mut count = 0;
        for_each_combination(4, 0, |c| {
            assert!(c.is_empty());
            count += 1
        });
        assert_eq!(count, 1);
        assert_eq!(binomial(40, 6), 3_838_380);
    }

    #[test]
    fn mode_ties_are_uniform_over_modes() {
        let labels = [Label(0), Label(1), Label(1), Label(0), Label(2)];
        let mut hits = [0usize; 3];
        for s in 0..2000 {
            let mut rng = RngState::from_seed(s);
            hits[mode_with_ties(&labels, &mut rng).unwrap().0 as usize] += 1;
        }
        assert_eq!(hits[2], 0);
        assert!(hits[0] > 850 && hits[1] > 850);
    }
}
