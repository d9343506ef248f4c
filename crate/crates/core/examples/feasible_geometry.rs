//! Nearest point to a target that stays inside the region and at least
//! D_min from every other antenna, in exact and simplified mode.
//!
//! ```text
//! cargo run --release --example feasible_geometry
//! ```

use prafd::geometry::{grid_nearest, nearest_feasible_point, FeasibleRegionSpec};
use prafd::Point;

fn main() -> prafd::Result<()> {
    let lambda = 0.01;
    let d = lambda / 2.0;
    let half = 2.0 * lambda;
    let cases = [
        ("free target", vec![Point::new(0.01, 0.01)], Point::new(-0.005, 0.0)),
        ("one disc", vec![Point::new(0.0, 0.0)], Point::new(0.001, 0.0005)),
        ("two discs", vec![Point::new(-0.002, 0.0), Point::new(0.002, 0.0)], Point::new(0.0, 0.0005)),
        ("outside the square", vec![], Point::new(0.03, -0.025)),
        ("corner and disc", vec![Point::new(0.018, 0.018)], Point::new(0.021, 0.021)),
    ];
    for (name, obstacles, target) in cases {
        let spec = FeasibleRegionSpec::new(half, obstacles, d);
        let exact = nearest_feasible_point(&target, &spec, false)?;
        let simple = nearest_feasible_point(&target, &spec, true)?;
        let grid = grid_nearest(&target, &spec, lambda / 200.0).expect("feasible grid point");
        println!(
            "{name:>20}: exact moves {:.3}λ, simplified {:.3}λ, grid {:.3}λ",
            (exact.point - target).norm() / lambda,
            (simple.point - target).norm() / lambda,
            (grid - target).norm() / lambda,
        );
        assert!(spec.is_feasible(&exact.point) && spec.is_feasible(&simple.point));
    }
    Ok(())
}
