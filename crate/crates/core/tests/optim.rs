use halograph::model::ParamStore;
use halograph::numerics::Tensor;
use halograph::training::{lr_schedule, optimizer_step, AdamConfig, OptimizerState};

/// Plain scalar Adam/AdamW, step by step.
struct Reference {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Reference {
    fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64, wd: f64) {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        self.t += 1;
        for k in 0..theta.len() {
            theta[k] -= lr * wd * theta[k];
            self.m[k] = b1 * self.m[k] + (1.0 - b1) * grad[k];
            self.v[k] = b2 * self.v[k] + (1.0 - b2) * grad[k] * grad[k];
            let mh = self.m[k] / (1.0 - b1.powi(self.t));
            let vh = self.v[k] / (1.0 - b2.powi(self.t));
            theta[k] -= lr * mh / (vh.sqrt() + eps);
        }
    }
}

fn run(wd: f64) {
    // f(θ) = Σ c_k (θ_k − a_k)², gradient 2 c_k (θ_k − a_k)
    let c = [1.0, 3.0, 0.5, 10.0];
    let a = [0.3, -1.0, 2.0, 0.0];
    let init = [0.5f32, 0.25, -1.5, 2.0];
    let mut store = ParamStore::new();
    store.insert("theta", Tensor::new([4], init.to_vec()).unwrap());
    let config = if wd > 0.0 {
        AdamConfig::adamw(wd)
    } else {
        AdamConfig::default()
    };
    let mut state = OptimizerState::new(&store, config);
    let mut reference = Reference {
        m: vec![0.0; 4],
        v: vec![0.0; 4],
        t: 0,
    };
    let mut theta: Vec<f64> = init.iter().map(|&v| v as f64).collect();
    for step in 0..5 {
        let lr = 0.05;
        let cur: Vec<f64> = store.get("theta").unwrap().data().iter().map(|&v| v as f64).collect();
        let grad: Vec<f64> = (0..4).map(|k| 2.0 * c[k] * (cur[k] - a[k])).collect();
        let g32 = Tensor::new([4], grad.iter().map(|&g| g as f32).collect()).unwrap();
        optimizer_step(&mut store, std::slice::from_ref(&g32), &mut state, lr).unwrap();
        // the reference sees the same f32-rounded gradients and parameters
        let grad_ref: Vec<f64> = g32.data().iter().map(|&g| g as f64).collect();
        theta.iter_mut().zip(&cur).for_each(|(t, &c)| *t = c);
        reference.step(&mut theta, &grad_ref, lr, wd);
        let got = store.get("theta").unwrap().data();
        for k in 0..4 {
            assert!(
                (got[k] as f64 - theta[k]).abs() < 1e-7,
                "step {step} coordinate {k}: {} vs {}",
                got[k],
                theta[k]
            );
        }
    }
    assert_eq!(state.step_count(), 5);
}

#[test]
fn adam_matches_reference_for_five_steps() {
    run(0.0);
}

#[test]
fn adamw_matches_reference_for_five_steps() {
    run(0.01);
}

#[test]
fn first_step_moves_by_learning_rate() {
    let mut store = ParamStore::new();
    store.insert("p", Tensor::new([3], vec![1.0, 1.0, 1.0]).unwrap());
    let mut state = OptimizerState::new(&store, AdamConfig::default());
    let g = Tensor::new([3], vec![5.0, -0.3, 0.0]).unwrap();
    optimizer_step(&mut store, &[g], &mut state, 0.01).unwrap();
    let p = store.get("p").unwrap().data();
    assert!((p[0] - 0.99).abs() < 1e-6);
    assert!((p[1] - 1.01).abs() < 1e-6);
    assert_eq!(p[2], 1.0);
}

#[test]
fn shape_mismatch_is_an_error() {
    let mut store = ParamStore::new();
    store.insert("p", Tensor::new([3], vec![1.0; 3]).unwrap());
    let mut state = OptimizerState::new(&store, AdamConfig::default());
    let g = Tensor::new([2], vec![1.0; 2]).unwrap();
    assert!(optimizer_step(&mut store, &[g], &mut state, 0.01).is_err());
    assert!(optimizer_step(&mut store, &[], &mut state, 0.01).is_err());
}

#[test]
fn cosine_schedule_endpoints() {
    let (hi, lo) = (1e-3, 1e-6);
    assert_eq!(lr_schedule(0, 100, hi, lo).unwrap(), hi);
    assert!((lr_schedule(100, 100, hi, lo).unwrap() - lo).abs() < 1e-18);
    assert!((lr_schedule(50, 100, hi, lo).unwrap() - (hi + lo) / 2.0).abs() < 1e-15);
    assert!(lr_schedule(0, 0, hi, lo).is_err());
    assert!(lr_schedule(101, 100, hi, lo).is_err());
}
