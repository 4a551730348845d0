use hsqkd::estimation::{self, BranchObservations};
use hsqkd::{ChannelDetectorSpec, SourceSpec, TruncationPolicy};

const MUS: [f64; 6] = [0.05, 0.1, 0.25, 0.5, 0.75, 1.0];
const MS: [u32; 4] = [2, 4, 8, 32];
const LOSSES: [f64; 5] = [0.0, 10.0, 20.0, 30.0, 40.0];

fn grid() -> impl Iterator<Item = (SourceSpec, ChannelDetectorSpec)> {
    MUS.into_iter().flat_map(|mu| {
        MS.into_iter().flat_map(move |m| {
            [SourceSpec::smhps(mu, m, 0.7, 0.5), SourceSpec::amhps(mu, m, 0.7, 0.5)]
                .into_iter()
                .flat_map(|s| LOSSES.into_iter().map(move |l| (s, ChannelDetectorSpec::fibre(l))))
        })
    })
}

#[test]
fn bounds_bracket_true_parameters() {
    let t = TruncationPolicy::default();
    let mut checked = 0;
    for (spec, ch) in grid() {
        let obs = BranchObservations::predict(&spec, &ch, &t).unwrap();
        let (y0l, y0u) = estimation::y0_bounds(&obs).unwrap();
        let y0 = ch.dark_yield();
        assert!(y0l <= y0 * (1.0 + 1e-9) && y0 <= y0u * (1.0 + 1e-9), "{spec:?} {ch:?}: {y0l} {y0u}");
        let y1l = estimation::y1_lower(&obs, y0u).unwrap();
        assert!(y1l <= ch.predicted_yield(1) * (1.0 + 1e-9), "{spec:?} {ch:?}: {y1l}");
        if y1l > 0.0 {
            let e1u = estimation::e1_upper(&obs, y0l, y1l).unwrap();
            let e1 = ch.predicted_error(1).unwrap();
            assert!(e1 <= e1u * (1.0 + 1e-9) && e1u <= 0.5, "{spec:?} {ch:?}: {e1} {e1u}");
        }
        checked += 1;
    }
    assert_eq!(checked, MUS.len() * MS.len() * 2 * LOSSES.len());
}

#[test]
fn cross_products_have_the_assumed_signs() {
    let t = TruncationPolicy::default();
    for (spec, ch) in grid().filter(|(_, ch)| ch.loss_db == 0.0) {
        let obs = BranchObservations::predict(&spec, &ch, &t).unwrap();
        let bad = estimation::sign_structure_violations(&obs, 1e-9);
        assert!(bad.is_empty(), "{spec:?}: {bad:?}");
    }
}

#[test]
fn bounds_degrade_gracefully_under_perturbation() {
    let t = TruncationPolicy::default();
    let ch = ChannelDetectorSpec::fibre(10.0);
    let obs = BranchObservations::predict(&SourceSpec::amhps(0.25, 4, 0.7, 0.5), &ch, &t).unwrap();
    for (gc, gnc, ec, enc) in [(1.01, 1.0, 1.0, 1.0), (1.0, 0.99, 1.0, 1.0), (1.0, 1.0, 1.05, 0.95)] {
        let p = obs.perturbed(gc, gnc, ec, enc);
        let (y0l, y0u) = estimation::y0_bounds(&p).unwrap();
        assert!(y0l >= 0.0 && y0u >= y0l);
        let y1l = estimation::y1_lower(&p, y0u).unwrap();
        assert!(y1l >= 0.0);
        if y1l > 0.0 {
            assert!((0.0..=0.5).contains(&estimation::e1_upper(&p, y0l, y1l).unwrap()));
        }
    }
}
