//! Pulling diagram gradients back to pixels, and coarse-grid gradients back
//! through a downsampling map.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::functional::DiagramGradient;
use crate::smear::Weighting;

/// Scatters each dot's partials onto its birth and death pixels, summing
/// where pixels are shared.
pub fn pullback_gradient(dgrad: &DiagramGradient, shape: (usize, usize)) -> Result<ScalarField> {
    let mut out = ScalarField::zeros(shape.0, shape.1);
    let len = out.len();
    let vals = out.values_mut();
    for e in &dgrad.entries {
        for (v, g) in [(e.dot.birth_vertex, e.d_birth), (e.dot.death_vertex, e.d_death)] {
            if v >= len {
                return Err(Error::IndexOutOfRange { index: v, len });
            }
            vals[v] += g;
        }
    }
    Ok(out)
}

/// Transpose of `f -> f_w`: every source pixel in patch `i` receives
/// `coarse_grad[i] * w_i(pixel)`.
pub fn compose_downsample_gradient(
    coarse_grad: &ScalarField,
    weighting: &Weighting,
) -> Result<ScalarField> {
    let coarse = weighting.coarse_shape();
    if coarse_grad.shape() != coarse {
        return Err(Error::ShapeMismatch {
            expected: coarse,
            got: coarse_grad.shape(),
        });
    }
    let (rows, cols) = weighting.source_shape();
    let k = weighting.patch();
    let ccols = coarse.1;
    let cg = coarse_grad.values();
    let w = weighting.weights();
    Ok(ScalarField::from_fn(rows, cols, |r, c| {
        cg[(r / k) * ccols + c / k] * w[r * cols + c]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{DotGradient, SelectedDot};

    fn entry(b: usize, d: usize, gb: f64, gd: f64) -> DotGradient {
        DotGradient {
            dot: SelectedDot {
                index: 0,
                birth: 0.0,
                death: 1.0,
                birth_vertex: b,
                death_vertex: d,
            },
            d_birth: gb,
            d_death: gd,
        }
    }

    #[test]
    fn scatter_single_dot() {
        let g = DiagramGradient {
            entries: vec![entry(3, 7, -1.0, 1.0)],
        };
        let px = pullback_gradient(&g, (1, 10)).unwrap();
        let mut expect = [0.0; 10];
        expect[3] = -1.0;
        expect[7] = 1.0;
        assert_eq!(px.values(), &expect[..]);
    }

    #[test]
    fn shared_vertices_accumulate() {
        let g = DiagramGradient {
            entries: vec![entry(0, 5, 0.0, 2.0), entry(1, 5, 0.0, 2.0)],
        };
        assert_eq!(pullback_gradient(&g, (1, 10)).unwrap().values()[5], 4.0);
    }

    #[test]
    fn out_of_range_vertex() {
        let g = DiagramGradient {
            entries: vec![entry(0, 12, 0.0, 2.0)],
        };
        assert!(pullback_gradient(&g, (1, 10)).is_err());
    }

    #[test]
    fn averaging_transpose() {
        let w = Weighting::center(2, 2, 2);
        let g = ScalarField::new(1, 1, vec![4.0]).unwrap();
        let src = compose_downsample_gradient(&g, &w).unwrap();
        assert_eq!(src.values(), &[1.0; 4]);
        assert!(compose_downsample_gradient(&ScalarField::zeros(2, 1), &w).is_err());
    }

    #[test]
    fn one_hot_weighting_routes_everything_to_one_pixel() {
        let w = Weighting::from_weights(2, 2, 2, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let g = ScalarField::new(1, 1, vec![3.0]).unwrap();
        assert_eq!(
            compose_downsample_gradient(&g, &w).unwrap().values(),
            &[0.0, 0.0, 0.0, 3.0]
        );
    }
}
