mod common;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use common::{max_abs, sine_experiment};
use mvrkm::forecasting::{recursive_forecast, OneStepPredictor};
use mvrkm::inference::{infer_dual, infer_primal, preimage_dual_linear, preimage_linear, InferenceRequest};
use mvrkm::training::{train_dual_eig, train_primal_eig, train_primal_stiefel, train_dual_stiefel};
use mvrkm::{Error, KernelSpec, MultiViewDataset, StiefelOptions, View, ViewConfig, ViewRole};

fn random(rng: &mut ChaCha20Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

fn views(rng: &mut ChaCha20Rng, n: usize) -> Vec<DMatrix<f64>> {
    let latent = random(rng, n, 3);
    let maps = [random(rng, 3, 4), random(rng, 3, 2), random(rng, 3, 2)];
    maps.iter().map(|m| &latent * m + random(rng, n, m.ncols()) * 0.1).collect()
}

fn dataset(x: &[DMatrix<f64>]) -> MultiViewDataset {
    MultiViewDataset::new(vec![
        View::new(ViewConfig::new("a", KernelSpec::Linear, ViewRole::Input), x[0].clone()),
        View::new(ViewConfig::new("b", KernelSpec::Rff { bandwidth: 3.0, feature_dim: 40, seed: 5 }, ViewRole::Input), x[1].clone()),
        View::new(ViewConfig::new("c", KernelSpec::Linear, ViewRole::Target), x[2].clone()),
    ])
    .unwrap()
}

fn row(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
    m.row(i).iter().copied().collect()
}

#[test]
fn primal_and_dual_inference_agree() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let train = dataset(&views(&mut rng, 50));
    let test = views(&mut rng, 10);
    let (pm, _) = train_primal_eig(&train, 3).unwrap();
    let (dm, _) = train_dual_eig(&train, 3).unwrap();
    for i in 0..10 {
        let req = InferenceRequest::new("c").with_view("a", row(&test[0], i)).with_view("b", row(&test[1], i));
        let p = infer_primal(&pm, &req).unwrap();
        let d = infer_dual(&dm, &req).unwrap();
        // Both sides use the same sign convention on H.
        let hp = mvrkm::model::primal_to_dual(&pm, &train.explicit_features().unwrap()).unwrap();
        let flip: Vec<f64> = (0..3).map(|j| (hp.column(j).dot(&dm.h.column(j))).signum()).collect();
        for j in 0..3 {
            assert!((p.h_hat[j] * flip[j] - d.h_hat[j]).abs() < 1e-6, "sample {i}");
        }
        let yp = preimage_linear(&pm, "c", &p.phi_hat).unwrap();
        let yd = preimage_dual_linear(&dm, "c", &d.k_hat).unwrap();
        assert!(max_abs(&yp, &yd) < 1e-6, "sample {i}: {yp:?} vs {yd:?}");
    }
}

#[test]
fn training_points_are_reproduced_by_full_rank_models() {
    let exp = sine_experiment();
    let (pm, _) = train_primal_eig(&exp.data, 4).unwrap();
    let (dm, _) = train_dual_eig(&exp.data, 4).unwrap();
    let x = &exp.data.views()[0].data;
    let y = &exp.data.views()[1].data;
    for i in [0, 17, 200, x.nrows() - 1] {
        let window = row(x, i);
        assert!((pm.predict_next(&window).unwrap() - y[(i, 0)]).abs() < 1e-8);
        assert!((dm.predict_next(&window).unwrap() - y[(i, 0)]).abs() < 1e-8);
    }
}

#[test]
fn predictions_are_rotation_invariant() {
    let exp = sine_experiment();
    let opts = StiefelOptions { seed: 3, ..Default::default() };
    let (p_raw, _) = train_primal_stiefel(&exp.data, 4, &opts, false).unwrap();
    let (p_rot, _) = train_primal_stiefel(&exp.data, 4, &opts, true).unwrap();
    let (d_raw, _) = train_dual_stiefel(&exp.data, 4, &opts, false).unwrap();
    let (d_rot, _) = train_dual_stiefel(&exp.data, 4, &opts, true).unwrap();
    let fp = recursive_forecast(&p_raw, &exp.seed_window, 50).unwrap();
    let fq = recursive_forecast(&p_rot, &exp.seed_window, 50).unwrap();
    let fd = recursive_forecast(&d_raw, &exp.seed_window, 50).unwrap();
    let fe = recursive_forecast(&d_rot, &exp.seed_window, 50).unwrap();
    assert!(max_abs(&fp, &fq) < 1e-6);
    assert!(max_abs(&fd, &fe) < 1e-6);
}

#[test]
fn request_errors() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let x = views(&mut rng, 20);
    let train = dataset(&x);
    let (pm, _) = train_primal_eig(&train, 2).unwrap();
    let (dm, _) = train_dual_eig(&train, 2).unwrap();

    let missing_b = InferenceRequest::new("c").with_view("a", row(&x[0], 0));
    assert!(infer_primal(&pm, &missing_b).is_err());
    assert!(infer_dual(&dm, &missing_b).is_err());

    let unknown = InferenceRequest::new("zzz").with_view("a", row(&x[0], 0)).with_view("b", row(&x[1], 0));
    assert!(matches!(infer_primal(&pm, &unknown), Err(Error::UnknownView(_))));

    let short = InferenceRequest::new("c").with_view("a", vec![1.0]).with_view("b", row(&x[1], 0));
    assert!(matches!(infer_dual(&dm, &short), Err(Error::DimensionMismatch { .. })));

    // Pre-images are only defined for linear views.
    let to_b = InferenceRequest::new("b").with_view("a", row(&x[0], 0)).with_view("c", row(&x[2], 0));
    let out = infer_primal(&pm, &to_b).unwrap();
    assert!(matches!(preimage_linear(&pm, "b", &out.phi_hat), Err(Error::WrongKernel { .. })));
}
