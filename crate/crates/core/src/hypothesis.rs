//! Hypothesis scoring and selection.
//!
//! Every group proposes a layout built from its own keypoint heatmaps and
//! the floor/ceiling presence found in its own segmentation. The layout is
//! rasterized and compared with that segmentation:
//!
//! `total = matching_regions + lambda * mean_iou`
//!
//! where the considered regions are the semantic labels present in either
//! mask, a region matches when its IoU is strictly above the threshold, and
//! the match count is deliberately left unnormalized so that layouts
//! explaining more regions win. The highest total wins; exact ties go to the
//! group with fewer walls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heatmap::{decode_to_frame, Heatmap, DEFAULT_MIN_CONFIDENCE};
use crate::keypoint::KeypointSet;
use crate::layout::{build_layout, rasterize, Layout};
use crate::mask::SegMask;
use crate::model::{Group, GroupBWalls, Label, Size};

pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.8;
pub const DEFAULT_PRESENCE_TAU: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    pub lambda: f64,
    pub iou_threshold: f64,
    pub presence_tau: f64,
    pub min_confidence: f64,
    pub b_walls: GroupBWalls,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            lambda: DEFAULT_LAMBDA,
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            presence_tau: DEFAULT_PRESENCE_TAU,
            min_confidence: DEFAULT_MIN_CONFIDENCE,
            b_walls: GroupBWalls::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisInput {
    pub group: Group,
    pub segmentation: SegMask,
    pub heatmaps: Heatmap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisScore {
    pub matching_regions: usize,
    pub mean_iou: f64,
    pub lambda: f64,
    pub total: f64,
}

impl HypothesisScore {
    pub fn new(matching_regions: usize, mean_iou: f64, lambda: f64) -> Self {
        HypothesisScore {
            matching_regions,
            mean_iou,
            lambda,
            total: matching_regions as f64 + lambda * mean_iou,
        }
    }
}

/// Fraction of non-void pixels carrying `label`, compared against `tau`.
pub fn detect_presence(seg: &SegMask, label: Label, tau: f64) -> Result<bool> {
    if !matches!(label, Label::Floor | Label::Ceiling) {
        return Err(Error::invalid(format!(
            "presence is only defined for floor and ceiling, not {}",
            label.name()
        )));
    }
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::invalid(format!("presence threshold {tau} outside [0, 1)")));
    }
    let counts = seg.counts();
    let non_void = seg.size().area() - counts[Label::Void as usize];
    if non_void == 0 {
        return Err(Error::invalid("segmentation is entirely void"));
    }
    Ok(counts[label as usize] as f64 / non_void as f64 >= tau)
}

/// Intersection and union pixel counts per label code.
fn overlap_counts(a: &SegMask, b: &SegMask) -> ([usize; 6], [usize; 6], [usize; 6]) {
    let mut inter = [0usize; 6];
    let mut ca = [0usize; 6];
    let mut cb = [0usize; 6];
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        ca[x as usize] += 1;
        cb[y as usize] += 1;
        if x == y {
            inter[x as usize] += 1;
        }
    }
    (inter, ca, cb)
}

/// IoU of `label` between two masks; `None` when neither mask has it.
pub fn region_iou(a: &SegMask, b: &SegMask, label: Label) -> Result<Option<f64>> {
    a.check_same_size(b)?;
    let (inter, ca, cb) = overlap_counts(a, b);
    let l = label as usize;
    let union = ca[l] + cb[l] - inter[l];
    Ok((union > 0).then(|| inter[l] as f64 / union as f64))
}

pub fn score(layout_mask: &SegMask, seg: &SegMask, lambda: f64, theta: f64) -> Result<HypothesisScore> {
    layout_mask.check_same_size(seg)?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::invalid(format!("IoU threshold {theta} outside (0, 1)")));
    }
    let (inter, ca, cb) = overlap_counts(layout_mask, seg);
    let mut matching = 0usize;
    let mut iou_sum = 0.0;
    let mut considered = 0usize;
    for label in Label::SEMANTIC {
        let l = label as usize;
        let union = ca[l] + cb[l] - inter[l];
        if union == 0 {
            continue;
        }
        let iou = inter[l] as f64 / union as f64;
        considered += 1;
        iou_sum += iou;
        if iou > theta {
            matching += 1;
        }
    }
    if considered == 0 {
        return Err(Error::invalid("no semantic region in either mask"));
    }
    Ok(HypothesisScore::new(matching, iou_sum / considered as f64, lambda))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredLayout {
    pub layout: Layout,
    pub mask: SegMask,
    pub score: HypothesisScore,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupOutcome {
    pub group: Group,
    pub floor_present: bool,
    pub ceiling_present: bool,
    /// Decoded keypoints in the image frame, before filtering by presence.
    pub keypoints: KeypointSet,
    /// `Err` carries the reason the hypothesis could not be built; it then
    /// scores minus infinity.
    pub result: std::result::Result<ScoredLayout, String>,
}

impl GroupOutcome {
    pub fn total(&self) -> f64 {
        self.result.as_ref().map_or(f64::NEG_INFINITY, |s| s.score.total)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult {
    pub chosen: Group,
    pub image_size: Size,
    /// Ordered A, B, C.
    pub outcomes: Vec<GroupOutcome>,
}

impl SelectionResult {
    pub fn outcome(&self, group: Group) -> &GroupOutcome {
        self.outcomes
            .iter()
            .find(|o| o.group == group)
            .expect("one outcome per group")
    }

    pub fn chosen_layout(&self) -> &ScoredLayout {
        self.outcome(self.chosen)
            .result
            .as_ref()
            .expect("the chosen group always has a layout")
    }
}

/// Runs one group's hypothesis end to end.
pub fn evaluate_hypothesis(input: &HypothesisInput, image_size: Size, config: &SelectConfig) -> Result<GroupOutcome> {
    let group = input.group;
    if input.heatmaps.group() != group {
        return Err(Error::invalid(format!(
            "hypothesis {group} carries group {} heatmaps",
            input.heatmaps.group()
        )));
    }
    if input.segmentation.size() != image_size {
        return Err(Error::invalid(format!(
            "hypothesis {group} segmentation is {}, expected {image_size}",
            input.segmentation.size()
        )));
    }
    let floor_present = detect_presence(&input.segmentation, Label::Floor, config.presence_tau)?;
    let ceiling_present = detect_presence(&input.segmentation, Label::Ceiling, config.presence_tau)?;
    let keypoints = decode_to_frame(&input.heatmaps, config.min_confidence, image_size)?;
    let required = group.required_ids(ceiling_present, floor_present);
    let result = match keypoints.select(&required) {
        None => Err(format!(
            "decoded keypoints {:?} lack required ids {required:?}",
            keypoints.ids()
        )),
        Some(kps) => build_layout(group, &kps, floor_present, ceiling_present, image_size)
            .map(|l| l.with_b_walls(config.b_walls))
            .map_err(|e| e.to_string())
            .and_then(|layout| {
                let mask = rasterize(&layout, image_size);
                let score = score(&mask, &input.segmentation, config.lambda, config.iou_threshold)
                    .map_err(|e| e.to_string())?;
                Ok(ScoredLayout { layout, mask, score })
            }),
    };
    Ok(GroupOutcome {
        group,
        floor_present,
        ceiling_present,
        keypoints,
        result,
    })
}

/// Picks the highest total; exact ties go to the group with fewer walls.
pub fn choose(totals: &[(Group, f64)]) -> Option<Group> {
    let mut ordered: Vec<&(Group, f64)> = totals.iter().filter(|(_, t)| t.is_finite()).collect();
    ordered.sort_by_key(|(g, _)| g.wall_count());
    let mut best: Option<&(Group, f64)> = None;
    for cand in ordered {
        if best.is_none_or(|b| cand.1 > b.1) {
            best = Some(cand);
        }
    }
    best.map(|b| b.0)
}

pub fn select(inputs: &[HypothesisInput], image_size: Size, config: &SelectConfig) -> Result<SelectionResult> {
    let mut outcomes = Vec::with_capacity(3);
    for group in Group::ALL {
        let mut matching = inputs.iter().filter(|i| i.group == group);
        let input = matching
            .next()
            .ok_or_else(|| Error::invalid(format!("hypothesis {group} absent")))?;
        if matching.next().is_some() {
            return Err(Error::invalid(format!("hypothesis {group} given more than once")));
        }
        outcomes.push(evaluate_hypothesis(input, image_size, config)?);
    }
    if inputs.len() != 3 {
        return Err(Error::invalid(format!("expected 3 hypotheses, got {}", inputs.len())));
    }
    let totals: Vec<(Group, f64)> = outcomes.iter().map(|o| (o.group, o.total())).collect();
    let chosen = choose(&totals).ok_or_else(|| {
        let reasons: Vec<String> = outcomes
            .iter()
            .map(|o| format!("{}: {}", o.group, o.result.as_ref().err().map_or("", |s| s)))
            .collect();
        Error::Computation(format!("every hypothesis failed ({})", reasons.join("; ")))
    })?;
    Ok(SelectionResult {
        chosen,
        image_size,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heatmap::{encode, DEFAULT_RESOLUTION};
    use crate::keypoint::Keypoint;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mask(w: u32, h: u32, codes: &[u8]) -> SegMask {
        SegMask::from_codes(Size::new(w, h), codes).unwrap()
    }

    fn random_mask(rng: &mut impl Rng, size: Size) -> SegMask {
        let codes: Vec<u8> = (0..size.area()).map(|_| rng.gen_range(0..=5)).collect();
        SegMask::from_codes(size, &codes).unwrap()
    }

    #[test]
    fn presence_examples() {
        let mut codes = vec![Label::CenterWall as u8; 100];
        let m = mask(10, 10, &codes);
        assert!(!detect_presence(&m, Label::Ceiling, 0.01).unwrap());
        codes[0] = Label::Floor as u8;
        assert!(detect_presence(&mask(10, 10, &codes), Label::Floor, 0.01).unwrap());
        let mut big = vec![Label::CenterWall as u8; 1000];
        for c in big.iter_mut().take(5) {
            *c = Label::Floor as u8;
        }
        assert!(!detect_presence(&mask(100, 10, &big), Label::Floor, 0.01).unwrap());
        assert!(detect_presence(&mask(2, 1, &[0, 0]), Label::Floor, 0.01).is_err());
        assert!(detect_presence(&m, Label::LeftWall, 0.01).is_err());
    }

    #[test]
    fn presence_ignores_void_pixels() {
        // 1 floor pixel among 50 non-void pixels
        let mut codes = vec![0u8; 100];
        for c in codes.iter_mut().take(50) {
            *c = Label::CenterWall as u8;
        }
        codes[0] = Label::Floor as u8;
        assert!(detect_presence(&mask(10, 10, &codes), Label::Floor, 0.02).unwrap());
    }

    #[test]
    fn iou_examples() {
        let a = mask(2, 2, &[1, 1, 4, 4]);
        assert_eq!(region_iou(&a, &a, Label::Floor).unwrap(), Some(1.0));
        let b = mask(2, 2, &[4, 4, 4, 4]);
        assert_eq!(region_iou(&a, &b, Label::Floor).unwrap(), Some(0.0));
        assert_eq!(region_iou(&a, &b, Label::Ceiling).unwrap(), None);
        assert!(region_iou(&a, &mask(1, 4, &[1, 1, 4, 4]), Label::Floor).is_err());
    }

    #[test]
    fn score_examples() {
        let m = mask(5, 1, &[1, 2, 3, 4, 5]);
        let s = score(&m, &m, 1.0, 0.8).unwrap();
        assert_eq!((s.matching_regions, s.mean_iou, s.total), (5, 1.0, 6.0));

        let layout = mask(2, 2, &[4, 4, 4, 4]);
        let seg = mask(2, 2, &[4, 4, 1, 1]);
        let s = score(&layout, &seg, 1.0, 0.8).unwrap();
        assert_eq!(s.matching_regions, 0);
        assert_eq!(s.mean_iou, 0.25);
        assert_eq!(s.total, 0.25);

        assert!(score(&mask(1, 1, &[0]), &mask(1, 1, &[0]), 1.0, 0.8).is_err());
        assert!(score(&m, &m, 1.0, 1.0).is_err());
    }

    #[test]
    fn iou_exactly_at_threshold_does_not_match() {
        // floor IoU = 4/5
        let a = mask(5, 1, &[1, 1, 1, 1, 1]);
        let b = mask(5, 1, &[1, 1, 1, 1, 4]);
        let s = score(&a, &b, 1.0, 0.8).unwrap();
        assert_eq!(s.matching_regions, 0);
    }

    #[test]
    fn argmax_and_tie_break() {
        assert_eq!(
            choose(&[(Group::A, 2.1), (Group::B, 3.9), (Group::C, 1.4)]),
            Some(Group::B)
        );
        assert_eq!(
            choose(&[(Group::A, 3.0), (Group::B, 3.0), (Group::C, 1.0)]),
            Some(Group::B)
        );
        assert_eq!(
            choose(&[(Group::A, 3.0), (Group::B, 3.0), (Group::C, 3.0)]),
            Some(Group::C)
        );
        assert_eq!(
            choose(&[
                (Group::A, 1.0),
                (Group::B, f64::NEG_INFINITY),
                (Group::C, f64::NEG_INFINITY)
            ]),
            Some(Group::A)
        );
        assert_eq!(choose(&[(Group::A, f64::NEG_INFINITY)]), None);
    }

    fn brute_force_score(a: &SegMask, b: &SegMask, lambda: f64, theta: f64) -> (usize, f64, f64) {
        let mut ious = Vec::new();
        for code in 1..=5u8 {
            let (mut i, mut u) = (0, 0);
            for y in 0..a.height() {
                for x in 0..a.width() {
                    let (pa, pb) = (a.get(x, y).code() == code, b.get(x, y).code() == code);
                    i += (pa && pb) as usize;
                    u += (pa || pb) as usize;
                }
            }
            if u > 0 {
                ious.push(i as f64 / u as f64);
            }
        }
        let n = ious.iter().filter(|&&v| v > theta).count();
        let m = ious.iter().sum::<f64>() / ious.len() as f64;
        (n, m, n as f64 + lambda * m)
    }

    #[test]
    fn score_matches_brute_force_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = random_mask(&mut rng, Size::new(8, 8));
            let b = random_mask(&mut rng, Size::new(8, 8));
            let s = score(&a, &b, 1.0, 0.8).unwrap();
            let (n, m, t) = brute_force_score(&a, &b, 1.0, 0.8);
            assert_eq!(s.matching_regions, n);
            assert!((s.mean_iou - m).abs() < 1e-12);
            assert!((s.total - t).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn self_score_is_label_count_plus_lambda(codes in prop::collection::vec(1u8..=5, 64), lambda in 0.1..5.0f64) {
            let m = SegMask::from_codes(Size::new(8, 8), &codes).unwrap();
            let k = m.present_labels().len();
            let s = score(&m, &m, lambda, 0.8).unwrap();
            prop_assert_eq!(s.matching_regions, k);
            prop_assert!((s.total - (k as f64 + lambda)).abs() < 1e-12);
        }

        #[test]
        fn iou_is_symmetric(a in prop::collection::vec(0u8..=5, 64), b in prop::collection::vec(0u8..=5, 64), l in 1u8..=5) {
            let ma = SegMask::from_codes(Size::new(8, 8), &a).unwrap();
            let mb = SegMask::from_codes(Size::new(8, 8), &b).unwrap();
            let label = Label::from_code(l).unwrap();
            prop_assert_eq!(region_iou(&ma, &mb, label).unwrap(), region_iou(&mb, &ma, label).unwrap());
        }

        #[test]
        fn agreeing_flip_never_lowers_iou(a in prop::collection::vec(0u8..=5, 64), b in prop::collection::vec(0u8..=5, 64), l in 1u8..=5, px in 0usize..64) {
            let label = Label::from_code(l).unwrap();
            let layout = SegMask::from_codes(Size::new(8, 8), &a).unwrap();
            let mut seg = SegMask::from_codes(Size::new(8, 8), &b).unwrap();
            seg.labels_mut()[px] = label;
            let before = region_iou(&layout, &seg, label).unwrap().unwrap();
            let mut flipped = layout.clone();
            flipped.labels_mut()[px] = label;
            let after = region_iou(&flipped, &seg, label).unwrap().unwrap();
            prop_assert!(after >= before);
        }

        #[test]
        fn choice_is_invariant_to_lambda_scaling_without_ties(
            shared_n in 0usize..6,
            m in prop::array::uniform3(0.0..1.0f64),
            lambda in 0.1..3.0f64,
            k in 0.1..10.0f64,
        ) {
            let totals = |lam: f64| -> Vec<(Group, f64)> {
                Group::ALL.iter().enumerate().map(|(i, g)| (*g, HypothesisScore::new(shared_n, m[i], lam).total)).collect()
            };
            let base = totals(lambda);
            let mut sorted: Vec<f64> = base.iter().map(|t| t.1).collect();
            sorted.sort_by(f64::total_cmp);
            prop_assume!(sorted[2] - sorted[1] > 1e-9);
            // scaling lambda keeps the argmax when the match counts agree
            prop_assert_eq!(choose(&base), choose(&totals(lambda * k)));
        }
    }

    fn single_wall_input(group: Group, seg: SegMask) -> HypothesisInput {
        let size = seg.size();
        let kps = KeypointSet::empty(group, size);
        HypothesisInput {
            group,
            segmentation: seg,
            heatmaps: encode(&kps, DEFAULT_RESOLUTION, 2.0).unwrap(),
        }
    }

    #[test]
    fn select_requires_all_three_groups() {
        let seg = SegMask::filled(Size::new(32, 32), Label::CenterWall);
        let inputs = vec![
            single_wall_input(Group::C, seg.clone()),
            single_wall_input(Group::B, seg),
        ];
        let err = select(&inputs, Size::new(32, 32), &SelectConfig::default()).unwrap_err();
        assert!(err.to_string().contains("hypothesis A absent"));
    }

    #[test]
    fn failing_groups_score_minus_infinity() {
        let size = Size::new(320, 320);
        let seg = SegMask::filled(size, Label::CenterWall);
        let inputs: Vec<HypothesisInput> = Group::ALL.iter().map(|&g| single_wall_input(g, seg.clone())).collect();
        let r = select(&inputs, size, &SelectConfig::default()).unwrap();
        assert_eq!(r.chosen, Group::C);
        assert_eq!(r.outcome(Group::A).total(), f64::NEG_INFINITY);
        assert_eq!(r.outcome(Group::B).total(), f64::NEG_INFINITY);
        assert_eq!(r.chosen_layout().score.total, 2.0);
    }

    #[test]
    fn select_picks_the_consistent_hypothesis() {
        let size = Size::new(320, 320);
        // a frontal single-wall room with ceiling and floor
        let c_kps = KeypointSet::new(
            Group::C,
            size,
            vec![
                Keypoint::new(1, 0.0, 80.0),
                Keypoint::new(2, 320.0, 80.0),
                Keypoint::new(3, 0.0, 240.0),
                Keypoint::new(4, 320.0, 240.0),
            ],
        )
        .unwrap();
        let truth = build_layout(Group::C, &c_kps, true, true, size).unwrap();
        let seg = rasterize(&truth, size);
        let c = HypothesisInput {
            group: Group::C,
            segmentation: seg.clone(),
            heatmaps: encode(&c_kps, DEFAULT_RESOLUTION, 2.0).unwrap(),
        };
        let a = single_wall_input(Group::A, seg.clone());
        let b = single_wall_input(Group::B, seg);
        let r = select(&[a, b, c], size, &SelectConfig::default()).unwrap();
        assert_eq!(r.chosen, Group::C);
        let s = r.chosen_layout().score;
        assert_eq!(s.matching_regions, 3);
        assert!(s.mean_iou > 0.97);
    }

    #[test]
    fn all_failing_is_a_computation_error() {
        let size = Size::new(320, 320);
        let mut codes = vec![Label::CenterWall as u8; size.area()];
        for c in codes.iter_mut().take(size.area() / 4) {
            *c = Label::Ceiling as u8;
        }
        let seg = SegMask::from_codes(size, &codes).unwrap();
        let inputs: Vec<HypothesisInput> = Group::ALL.iter().map(|&g| single_wall_input(g, seg.clone())).collect();
        let err = select(&inputs, size, &SelectConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
