//! Attack objective and presence rate.

use crate::error::{Error, Result};
use crate::raster::DepthMap;
use crate::scene::RegionMask;

fn check(maps: &[(&DepthMap, &str)], region: &RegionMask) -> Result<()> {
    let dims = region.dims();
    for (m, name) in maps {
        m.ensure_dims(dims, name)?;
    }
    Ok(())
}

/// Σ over R of |d_est − d_tgt|.
pub fn objective(d_est: &DepthMap, d_tgt: &DepthMap, region: &RegionMask) -> Result<f64> {
    check(
        &[(d_est, "estimated depth"), (d_tgt, "target depth")],
        region,
    )?;
    Ok(region
        .members()
        .map(|p| (d_est.values[p] - d_tgt.values[p]).abs())
        .sum())
}

/// Mean over R of |d_est − d_back| / |d_orig − d_back|.
///
/// 1 when the estimate matches the scene with the object, 0 when it matches
/// the background alone. Not clamped: an estimate past the original depth
/// yields values above 1.
pub fn presence_rate(
    d_est: &DepthMap,
    d_orig: &DepthMap,
    d_back: &DepthMap,
    region: &RegionMask,
) -> Result<f64> {
    check(
        &[
            (d_est, "estimated depth"),
            (d_orig, "object depth"),
            (d_back, "background depth"),
        ],
        region,
    )?;
    let mut total = 0.0;
    for p in region.members() {
        let denom = (d_orig.values[p] - d_back.values[p]).abs();
        if denom == 0.0 {
            return Err(Error::DegenerateScene(format!(
                "pixel {p} has equal object and background depth"
            )));
        }
        total += (d_est.values[p] - d_back.values[p]).abs() / denom;
    }
    Ok(total / region.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn region(w: usize, h: usize, member: Vec<bool>) -> RegionMask {
        RegionMask::new(w, h, member, (1, 1)).unwrap()
    }

    #[test]
    fn objective_identity_and_hand_value() {
        let r = region(3, 1, vec![true, false, true]);
        let tgt = DepthMap::new(3, 1, vec![4.0, 9.0, 4.5]).unwrap();
        assert_eq!(objective(&tgt, &tgt, &r).unwrap(), 0.0);
        let est = DepthMap::new(3, 1, vec![3.0, 100.0, 5.0]).unwrap();
        assert_eq!(objective(&est, &tgt, &r).unwrap(), 1.5);
    }

    #[test]
    fn objective_ignores_pixels_outside_region() {
        let r = region(2, 2, vec![true, false, false, false]);
        let a = DepthMap::new(2, 2, vec![1.0, 0.0, 50.0, 7.0]).unwrap();
        let b = DepthMap::new(2, 2, vec![1.0, 9.0, 0.0, 2.0]).unwrap();
        assert_eq!(objective(&a, &b, &r).unwrap(), 0.0);
    }

    #[test]
    fn presence_endpoints_and_midpoint() {
        let r = region(1, 1, vec![true]);
        let orig = DepthMap::new(1, 1, vec![2.0]).unwrap();
        let back = DepthMap::new(1, 1, vec![4.0]).unwrap();
        assert_eq!(presence_rate(&orig, &orig, &back, &r).unwrap(), 1.0);
        assert_eq!(presence_rate(&back, &orig, &back, &r).unwrap(), 0.0);
        let est = DepthMap::new(1, 1, vec![3.0]).unwrap();
        assert_eq!(presence_rate(&est, &orig, &back, &r).unwrap(), 0.5);
    }

    #[test]
    fn presence_degenerate_and_shape_errors() {
        let r = region(2, 1, vec![true, true]);
        let orig = DepthMap::new(2, 1, vec![2.0, 4.0]).unwrap();
        let back = DepthMap::new(2, 1, vec![4.0, 4.0]).unwrap();
        assert!(matches!(
            presence_rate(&orig, &orig, &back, &r),
            Err(Error::DegenerateScene(_))
        ));
        let small = DepthMap::new(1, 1, vec![1.0]).unwrap();
        assert!(matches!(objective(&small, &orig, &r), Err(Error::Shape(_))));
    }

    fn maps(values: &[f64], w: usize) -> DepthMap {
        DepthMap::new(w, values.len() / w, values.to_vec()).unwrap()
    }

    proptest! {
        #[test]
        fn objective_is_a_metric_on_r(
            a in proptest::collection::vec(0.0f64..10.0, 16),
            b in proptest::collection::vec(0.0f64..10.0, 16),
            c in proptest::collection::vec(0.0f64..10.0, 16),
            m in proptest::collection::vec(any::<bool>(), 16),
        ) {
            prop_assume!(m.iter().any(|x| *x));
            let r = region(4, 4, m);
            let (a, b, c) = (maps(&a, 4), maps(&b, 4), maps(&c, 4));
            let ab = objective(&a, &b, &r).unwrap();
            prop_assert_eq!(ab, objective(&b, &a, &r).unwrap());
            prop_assert!(ab <= objective(&a, &c, &r).unwrap() + objective(&c, &b, &r).unwrap() + 1e-12);
            prop_assert!(ab >= 0.0);
        }
    }
}
