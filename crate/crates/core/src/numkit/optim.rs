use super::{GradientBundle, LayerGrad, Matrix, ParameterSet};
use crate::{Error, Result};

/// Momentum buffer, shaped like the parameters it accelerates.
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity {
    pub layers: Vec<LayerGrad>,
}

impl Velocity {
    pub fn zeros_like(params: &ParameterSet) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }
}

fn congruent(params: &ParameterSet, grads: &[LayerGrad]) -> bool {
    params.layers.len() == grads.len()
        && params
            .layers
            .iter()
            .zip(grads)
            .all(|(l, g)| l.weights.shape() == g.weights.shape() && l.bias.len() == g.bias.len())
}

/// Momentum SGD: `v ← momentum·v − lr·g`, then `w ← w + v`, elementwise.
pub fn sgd_step(
    params: &mut ParameterSet,
    grads: &GradientBundle,
    lr: f64,
    momentum: f64,
    velocity: &mut Velocity,
) -> Result<()> {
    if !(lr >= 0.0) || !(0.0..1.0).contains(&momentum) {
        return Err(Error::Input(format!(
            "invalid step parameters lr={lr} momentum={momentum}"
        )));
    }
    if !congruent(params, &grads.layers) || !congruent(params, &velocity.layers) {
        return Err(Error::Input(
            "gradient or velocity shape does not match parameters".into(),
        ));
    }
    for ((layer, g), v) in params
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut velocity.layers)
    {
        for ((w, gw), vw) in layer
            .weights
            .data_mut()
            .iter_mut()
            .zip(g.weights.data())
            .zip(v.weights.data_mut())
        {
            *vw = momentum * *vw - lr * gw;
            *w += *vw;
        }
        for ((b, gb), vb) in layer.bias.iter_mut().zip(&g.bias).zip(&mut v.bias) {
            *vb = momentum * *vb - lr * gb;
            *b += *vb;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{init_params, Activation, LayerSpec};

    fn scalar_net(w: f64) -> ParameterSet {
        let mut p = ParameterSet::zeros(&[LayerSpec::new(1, 1, Activation::Identity)]).unwrap();
        p.layers[0].weights.set(0, 0, w);
        p
    }

    fn scalar_grad(g: f64) -> GradientBundle {
        GradientBundle {
            layers: vec![LayerGrad {
                weights: Matrix::from_vec(1, 1, vec![g]).unwrap(),
                bias: vec![0.0],
            }],
            loss: 0.0,
        }
    }

    #[test]
    fn two_momentum_steps_by_hand() {
        // v1 = -0.1, w1 = -0.1; v2 = 0.9*-0.1 - 0.1 = -0.19, w2 = -0.29
        let mut p = scalar_net(0.0);
        let mut v = Velocity::zeros_like(&p);
        let g = scalar_grad(1.0);
        sgd_step(&mut p, &g, 0.1, 0.9, &mut v).unwrap();
        assert!((p.layers[0].weights.get(0, 0) + 0.1).abs() < 1e-15);
        sgd_step(&mut p, &g, 0.1, 0.9, &mut v).unwrap();
        assert!((p.layers[0].weights.get(0, 0) + 0.29).abs() < 1e-15);
    }

    #[test]
    fn zero_lr_leaves_params_and_decays_velocity() {
        let mut p = init_params(&LayerSpec::stack(&[3, 2]), 5).unwrap();
        let before = p.clone();
        let mut v = Velocity::zeros_like(&p);
        v.layers[0].weights.data_mut().fill(2.0);
        v.layers[0].bias.fill(-1.0);
        let g = GradientBundle {
            layers: v.layers.clone(),
            loss: 0.0,
        };
        // velocity is non-zero, so w moves by momentum*v; use momentum 0 to check the null step
        let mut p0 = p.clone();
        let mut v0 = v.clone();
        sgd_step(&mut p0, &g, 0.0, 0.0, &mut v0).unwrap();
        assert_eq!(p0, before);
        assert!(v0.layers[0].weights.data().iter().all(|&x| x == 0.0));

        sgd_step(&mut p, &g, 0.0, 0.5, &mut v).unwrap();
        assert!(v.layers[0].weights.data().iter().all(|&x| x == 1.0));
        assert!(v.layers[0].bias.iter().all(|&x| x == -0.5));
    }

    #[test]
    fn plain_sgd_single_step() {
        let mut p = init_params(&LayerSpec::stack(&[2, 2]), 9).unwrap();
        let before = p.clone();
        let mut v = Velocity::zeros_like(&p);
        let mut g = GradientBundle {
            layers: v.layers.clone(),
            loss: 0.0,
        };
        g.layers[0].weights.data_mut().copy_from_slice(&[1.0, -2.0, 0.5, 3.0]);
        sgd_step(&mut p, &g, 0.25, 0.0, &mut v).unwrap();
        for (i, (&a, &b)) in p.layers[0]
            .weights
            .data()
            .iter()
            .zip(before.layers[0].weights.data())
            .enumerate()
        {
            assert_eq!(a, b - 0.25 * g.layers[0].weights.data()[i]);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = init_params(&LayerSpec::stack(&[2, 2]), 9).unwrap();
        let other = init_params(&LayerSpec::stack(&[3, 2]), 9).unwrap();
        let mut v = Velocity::zeros_like(&p);
        let g = GradientBundle {
            layers: Velocity::zeros_like(&other).layers,
            loss: 0.0,
        };
        assert!(matches!(
            sgd_step(&mut p, &g, 0.1, 0.0, &mut v),
            Err(Error::Input(_))
        ));
        let g_ok = GradientBundle {
            layers: Velocity::zeros_like(&p).layers,
            loss: 0.0,
        };
        assert!(sgd_step(&mut p, &g_ok, 0.1, 1.0, &mut v).is_err());
    }
}
