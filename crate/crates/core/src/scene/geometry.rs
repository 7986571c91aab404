//! Spatial relations between bounding boxes.

use std::collections::BTreeSet;

use super::extract::ExtractionConfig;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn from_array([x, y, w, h]: [f64; 4]) -> Self {
        BBox { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let h = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }

    /// Fraction of this box's area lying inside `other`.
    pub fn containment_ratio(&self, other: &BBox) -> f64 {
        self.intersection_area(other) / self.area()
    }
}

/// Pairs `(a, b)` of box indices for which each relation holds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpatialRelations {
    pub to_left: BTreeSet<(usize, usize)>,
    pub to_right: BTreeSet<(usize, usize)>,
    pub above: BTreeSet<(usize, usize)>,
    pub below: BTreeSet<(usize, usize)>,
    pub within: BTreeSet<(usize, usize)>,
}

/// Center-point ordering with a margin of `center_margin_fraction` of the
/// image size; `within` needs the containment ratio threshold and a
/// strictly smaller area.
pub fn geometric_relations(boxes: &[BBox], width: u32, height: u32, cfg: &ExtractionConfig) -> SpatialRelations {
    let dx = cfg.center_margin_fraction * width as f64;
    let dy = cfg.center_margin_fraction * height as f64;
    let mut r = SpatialRelations::default();
    for (i, a) in boxes.iter().enumerate() {
        let (ax, ay) = a.center();
        for (j, b) in boxes.iter().enumerate() {
            if i == j {
                continue;
            }
            let (bx, by) = b.center();
            if ax + dx < bx {
                r.to_left.insert((i, j));
                r.to_right.insert((j, i));
            }
            if ay + dy < by {
                r.above.insert((i, j));
                r.below.insert((j, i));
            }
            if a.containment_ratio(b) >= cfg.containment_ratio && a.area() < b.area() {
                r.within.insert((i, j));
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> ExtractionConfig {
        ExtractionConfig::default()
    }

    #[test]
    fn horizontal_offset_only() {
        let a = BBox::new(0.0, 40.0, 20.0, 20.0); // center (10, 50)
        let b = BBox::new(80.0, 40.0, 20.0, 20.0); // center (90, 50)
        let r = geometric_relations(&[a, b], 100, 100, &cfg());
        assert!(r.to_left.contains(&(0, 1)));
        assert!(r.to_right.contains(&(1, 0)));
        assert!(r.above.is_empty() && r.below.is_empty());
    }

    #[test]
    fn margin_suppresses_near_ties() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        let b = BBox::new(4.0, 0.0, 10.0, 10.0);
        let mut c = cfg();
        c.center_margin_fraction = 0.05;
        let r = geometric_relations(&[a, b], 100, 100, &c);
        assert!(r.to_left.is_empty());
        c.center_margin_fraction = 0.03;
        assert!(geometric_relations(&[a, b], 100, 100, &c).to_left.contains(&(0, 1)));
    }

    #[test]
    fn duplicate_geometry_is_not_within() {
        let a = BBox::new(5.0, 5.0, 10.0, 10.0);
        let r = geometric_relations(&[a, a], 100, 100, &cfg());
        assert!(r.within.is_empty());
    }

    #[test]
    fn full_containment_is_asymmetric() {
        let a = BBox::new(10.0, 10.0, 10.0, 10.0);
        let b = BBox::new(0.0, 0.0, 100.0, 100.0);
        let r = geometric_relations(&[a, b], 100, 100, &cfg());
        assert_eq!(r.within, BTreeSet::from([(0, 1)]));
    }

    #[test]
    fn containment_ratio_threshold() {
        // 80 of a's 100 square pixels overlap b.
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        let b = BBox::new(2.0, 0.0, 50.0, 50.0);
        assert_eq!(a.containment_ratio(&b), 0.8);
        let r = geometric_relations(&[a, b], 100, 100, &cfg());
        assert!(r.within.is_empty());
        let mut c = cfg();
        c.containment_ratio = 0.8;
        assert!(geometric_relations(&[a, b], 100, 100, &c).within.contains(&(0, 1)));
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (0u32..100, 0u32..100, 1u32..60, 1u32..60)
            .prop_map(|(x, y, w, h)| BBox::new(x as f64, y as f64, w as f64, h as f64))
    }

    proptest! {
        #[test]
        fn relation_laws(boxes in prop::collection::vec(arb_box(), 0..7), margin in 0.0f64..0.1) {
            let mut c = cfg();
            c.center_margin_fraction = margin;
            let r = geometric_relations(&boxes, 100, 100, &c);
            let flip = |s: &BTreeSet<(usize, usize)>| s.iter().map(|&(a, b)| (b, a)).collect::<BTreeSet<_>>();
            prop_assert_eq!(&r.to_right, &flip(&r.to_left));
            prop_assert_eq!(&r.below, &flip(&r.above));
            for set in [&r.to_left, &r.above, &r.within] {
                prop_assert!(set.iter().all(|(a, b)| a != b));
            }
            // within is asymmetric and, by strict area, acyclic
            for &(a, b) in &r.within {
                prop_assert!(!r.within.contains(&(b, a)));
                prop_assert!(boxes[a].area() < boxes[b].area());
            }
        }
    }
}
