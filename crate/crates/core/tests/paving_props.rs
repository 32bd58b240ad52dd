//! Paver and projection properties on sets with known membership.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdoa_core::paving::{Coverage, Label};
use rdoa_core::sevia::{pave, Verdict};
use rdoa_core::{BoxVec, Interval, Paving, ProjTree};

// Ellipse x²/a² + y²/b² ≤ 1 centred at (cx, cy).
#[derive(Debug, Clone, Copy)]
struct Ellipse {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
}

impl Ellipse {
    fn level(&self, w: &BoxVec) -> Interval {
        let dx = (w.dims()[0] - Interval::point(self.cx)) / Interval::point(self.a);
        let dy = (w.dims()[1] - Interval::point(self.cy)) / Interval::point(self.b);
        dx.sqr() + dy.sqr()
    }

    fn contains(&self, p: &[f64]) -> bool {
        let dx = (p[0] - self.cx) / self.a;
        let dy = (p[1] - self.cy) / self.b;
        dx * dx + dy * dy <= 1.0
    }

    fn classify(&self, w: &BoxVec) -> Verdict {
        let r = self.level(w);
        if r.hi() <= 1.0 {
            Verdict::Accept
        } else if r.lo() > 1.0 {
            Verdict::Reject
        } else {
            Verdict::Unknown
        }
    }
}

fn root() -> BoxVec {
    BoxVec::from_bounds(&[(-2.0, 2.0), (-2.0, 2.0)])
}

fn run(e: Ellipse, n: usize, eps: f64) -> Paving {
    let test = |w: &BoxVec| e.classify(w);
    pave(&test, &root(), n, vec![root()], eps).unwrap().paving
}

fn ellipse() -> impl Strategy<Value = Ellipse> {
    (-0.8..0.8f64, -0.8..0.8f64, 0.2..1.2f64, 0.2..1.2f64).prop_map(|(cx, cy, a, b)| Ellipse {
        cx,
        cy,
        a,
        b,
    })
}

fn point_in(rng: &mut ChaCha8Rng, b: &BoxVec) -> Vec<f64> {
    b.dims()
        .iter()
        .map(|d| rng.gen_range(d.lo()..=d.hi()))
        .collect()
}

fn tree_of(boxes: &[BoxVec]) -> ProjTree {
    let mut t = ProjTree::new(root());
    for b in boxes {
        t.insert(b);
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn labels_are_sound_and_partition_the_root(e in ellipse(), seed in any::<u64>()) {
        let p = run(e, 2, 0.05);
        let total: f64 = [Label::In, Label::Out, Label::Bou].iter().map(|&l| p.volume(l)).sum();
        prop_assert!((total - 16.0).abs() <= 16.0 * 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for b in p.boxes_in() {
            prop_assert!(e.contains(&point_in(&mut rng, b)));
        }
        for b in p.boxes_out() {
            prop_assert!(!e.contains(&point_in(&mut rng, b)));
        }
        for b in p.boxes_bou() {
            prop_assert!(b.width() < 0.05);
        }
        let area = std::f64::consts::PI * e.a * e.b;
        prop_assert!(p.volume(Label::In) <= area);
        prop_assert!(p.volume(Label::In) + p.volume(Label::Bou) >= area.min(16.0) - 1e-9);
    }

    #[test]
    fn halving_eps_refines_the_inner_set(e in ellipse()) {
        let coarse = run(e, 2, 0.1);
        let fine = run(e, 2, 0.05);
        let t = tree_of(fine.boxes_in());
        for b in coarse.boxes_in() {
            prop_assert_eq!(t.covers(b), Coverage::Inside);
        }
        prop_assert!(fine.volume(Label::In) >= coarse.volume(Label::In));
        prop_assert!(fine.volume(Label::Bou) <= coarse.volume(Label::Bou));
    }

    #[test]
    fn projection_agrees_with_inner_boxes(e in ellipse(), lo in -2.0..2.0f64, w in 0.0..1.0f64, seed in any::<u64>()) {
        // n = 1: x is the state, y the control
        let p = run(e, 1, 0.05);
        let tree = p.project();
        let spans = tree.components_1d();
        let hit = |x: f64| p.boxes_in().iter().any(|b| b.dims()[0].contains(x));
        let query = BoxVec::from_bounds(&[(lo, (lo + w).min(2.0))]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<f64> = (0..50).map(|_| point_in(&mut rng, &query)[0]).collect();
        match tree.covers(&query) {
            Coverage::Inside => prop_assert!(samples.iter().all(|&x| hit(x))),
            Coverage::Outside => prop_assert!(samples.iter().all(|&x| !hit(x) || x == query.dims()[0].lo() || x == query.dims()[0].hi())),
            Coverage::Straddle => {}
        }
        let measure: f64 = spans.iter().map(|(a, b)| b - a).sum();
        prop_assert!((measure - tree.measure()).abs() <= 1e-12);
        for (a, b) in &spans {
            prop_assert!(hit((a + b) / 2.0));
        }
    }

    #[test]
    fn text_round_trip(e in ellipse()) {
        let p = run(e, 1, 0.1);
        let back = Paving::from_text(&p.to_text()).unwrap();
        prop_assert_eq!(back, p);
    }
}

#[test]
fn thread_count_does_not_change_the_paving() {
    let e = Ellipse {
        cx: 0.1,
        cy: -0.3,
        a: 1.1,
        b: 0.7,
    };
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = one.install(|| run(e, 2, 0.01));
    let b = four.install(|| run(e, 2, 0.01));
    assert_eq!(a.to_text(), b.to_text());
}
