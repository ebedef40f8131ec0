use lattn_core::corpus::PAD_ID;
use lattn_core::models::{
    gradient_check, tiny_config, tiny_gradient_check, Architecture, Model, Pass,
};
use lattn_core::rng::{self, Stream};
use lattn_core::tensor::{Grads, DEFAULT_FD_STEP};
use lattn_core::Error;
use rand::Rng;

#[test]
fn pinned_fixture_all_architectures() {
    for arch in Architecture::all() {
        for tie in [false, true] {
            let report = tiny_gradient_check(arch, tie, 0, DEFAULT_FD_STEP).unwrap();
            assert!(report.max_rel_error < 1e-4, "{arch} tie={tie}: {report:?}");
        }
    }
}

#[test]
fn seed_sweep() {
    for seed in 0..20 {
        for arch in Architecture::all() {
            for tie in [false, true] {
                let report = tiny_gradient_check(arch, tie, seed, DEFAULT_FD_STEP).unwrap();
                assert!(
                    report.max_rel_error < 1e-4,
                    "seed {seed} {arch} tie={tie}: {report:?}"
                );
            }
        }
    }
}

#[test]
fn frozen_parameters_get_zero_gradient() {
    let arch: Architecture = "dict-latent".parse().unwrap();
    let mut model = Model::init(tiny_config(arch), 0.5, 1).unwrap();
    model.params_mut().set_frozen("attn.u", true).unwrap();
    let mut pass = Pass::new(&model);
    pass.forward(&[3, 4, 5, PAD_ID, PAD_ID], 1).unwrap();
    let grads = pass.backward().unwrap();
    assert!(grads
        .get("attn.u")
        .unwrap()
        .data()
        .iter()
        .all(|&g| g == 0.0));
    assert!(grads
        .get("attn.V")
        .unwrap()
        .data()
        .iter()
        .any(|&g| g != 0.0));
    let report = gradient_check(&model, &[(vec![3, 4, 5, 0, 0], 1)], DEFAULT_FD_STEP).unwrap();
    assert!(report.max_rel_error < 1e-4, "{report:?}");
}

#[test]
fn second_backward_without_forward_fails() {
    let model = Model::init(tiny_config("dict-none".parse().unwrap()), 0.1, 0).unwrap();
    let mut pass = Pass::new(&model);
    assert!(matches!(pass.backward(), Err(Error::NoForward)));
    pass.forward(&[2, 3, 0, 0, 0], 0).unwrap();
    pass.backward().unwrap();
    assert!(matches!(pass.backward(), Err(Error::NoForward)));
}

/// Backward of a sum of two losses equals the sum of the separate backwards.
#[test]
fn backward_is_linear() {
    let mut r = rng::stream(5, Stream::Sampling);
    for arch in Architecture::all() {
        let model = Model::init(tiny_config(arch), 0.5, 9).unwrap();
        let a: Vec<usize> = (0..5).map(|_| r.gen_range(0..20)).collect();
        let b: Vec<usize> = (0..5).map(|_| r.gen_range(0..20)).collect();
        let mut joint = Grads::zeros_like(model.params());
        model.loss_and_grad(&a, 0, 1.0, &mut joint).unwrap();
        model.loss_and_grad(&b, 2, 1.0, &mut joint).unwrap();
        let mut ga = Grads::zeros_like(model.params());
        model.loss_and_grad(&a, 0, 1.0, &mut ga).unwrap();
        let mut gb = Grads::zeros_like(model.params());
        model.loss_and_grad(&b, 2, 1.0, &mut gb).unwrap();
        ga.add_assign(&gb).unwrap();
        for ((_, x), (_, y)) in joint.iter().zip(ga.iter()) {
            for (p, q) in x.data().iter().zip(y.data()) {
                assert!((p - q).abs() <= 1e-12 * (1.0 + p.abs()), "{arch}");
            }
        }
    }
}

#[test]
fn half_squared_norm_gradient_is_identity() {
    use lattn_core::tensor::{grad_check, ParamStore, Tensor};
    let mut store = ParamStore::new();
    store
        .insert("theta", Tensor::vector(vec![0.3, -0.7, 1.9, 0.0]))
        .unwrap();
    let mut grads = Grads::zeros_like(&store);
    grads
        .get_mut("theta")
        .unwrap()
        .data_mut()
        .copy_from_slice(store.get("theta").unwrap().data());
    let report = grad_check(&store, &grads, DEFAULT_FD_STEP, |p| {
        Ok(0.5 * p.get("theta")?.sq_norm())
    })
    .unwrap();
    // the zero entry sees ~1e-14 of cancellation noise against the 1e-8
    // denominator floor
    assert!(report.max_rel_error < 1e-5, "{report:?}");
}
