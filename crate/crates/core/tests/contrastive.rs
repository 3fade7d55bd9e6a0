use coro_core::contrastive::*;
use coro_core::numerics::{finite_diff_check, l2_normalize, DenseMatrix, Rng};
use coro_core::optim::Parameters;
use coro_core::study::{synth_cohort, SynthConfig};

fn random(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.normal()).unwrap()
}

fn normalized(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
    let r: Vec<Vec<f64>> = (0..rows)
        .map(|_| l2_normalize(&(0..cols).map(|_| rng.normal()).collect::<Vec<_>>()).unwrap())
        .collect();
    DenseMatrix::from_rows(&r).unwrap()
}

#[test]
fn projection_gradients_match_finite_differences() {
    for kind in LossKind::ALL {
        let mut rng = Rng::new(11);
        let vx = random(4, 6, &mut rng);
        let tx = random(4, 7, &mut rng);
        let shape = ProjectionShape { video_dim: 6, text_dim: 7, output_dim: 5 };
        let mut params = ProjectionPair::new(shape, 0.08, 3);
        params.siglip.data_mut()[1] = -0.7;
        let (_, grads) = contrastive_objective(&params, &vx, &tx, kind, 0.08).unwrap();
        let flat = params.flatten();
        let check = finite_diff_check(
            |p| {
                let mut q = params.clone();
                q.assign(p).unwrap();
                contrastive_objective(&q, &vx, &tx, kind, 0.08).unwrap().0
            },
            &flat,
            &grads.flatten(),
            1e-5,
        )
        .unwrap();
        assert!(check.max_rel_error < 1e-5, "{kind:?}: {check:?}");
    }
}

#[test]
fn clip_toy_batch_gradient() {
    let mut rng = Rng::new(5);
    let vx = random(2, 4, &mut rng);
    let tx = random(2, 4, &mut rng);
    let shape = ProjectionShape { video_dim: 4, text_dim: 4, output_dim: 3 };
    let params = ProjectionPair::new(shape, 0.07, 1);
    let (_, grads) = contrastive_objective(&params, &vx, &tx, LossKind::Clip, 0.07).unwrap();
    let check = finite_diff_check(
        |p| {
            let mut q = params.clone();
            q.assign(p).unwrap();
            contrastive_objective(&q, &vx, &tx, LossKind::Clip, 0.07).unwrap().0
        },
        &params.flatten(),
        &grads.flatten(),
        1e-6,
    )
    .unwrap();
    assert!(check.max_rel_error < 1e-5);
}

#[test]
fn loss_permutation_invariance_and_bounds() {
    let mut rng = Rng::new(2);
    let sig = SiglipParams { log_scale: 1.0, bias: -0.5 };
    for _ in 0..50 {
        let b = 2 + rng.below(5);
        let v = normalized(b, 4, &mut rng);
        let t = normalized(b, 4, &mut rng);
        let mut perm: Vec<usize> = (0..b).collect();
        rng.shuffle(&mut perm);
        for kind in LossKind::ALL {
            let a = contrastive_loss(kind, &v, &t, 0.1, sig).unwrap().loss;
            let p = contrastive_loss(kind, &v.select_rows(&perm), &t.select_rows(&perm), 0.1, sig).unwrap().loss;
            assert!((a - p).abs() < 1e-12);
            assert!(a >= 0.0);
        }
    }
}

#[test]
fn clip_decreases_with_diagonal_similarity() {
    let mut rng = Rng::new(8);
    let sig = SiglipParams { log_scale: 0.0, bias: 0.0 };
    for _ in 0..20 {
        let s = DenseMatrix::from_fn(3, 3, |_, _| rng.uniform_range(-1.0, 1.0)).unwrap();
        let g = loss_from_similarity(LossKind::Clip, &s, 0.07, sig).unwrap().grad_sim;
        for i in 0..3 {
            assert!(g[(i, i)] < 0.0);
            let mut up = s.clone();
            up.data_mut()[i * 3 + i] += 1e-4;
            let l0 = loss_from_similarity(LossKind::Clip, &s, 0.07, sig).unwrap().loss;
            let l1 = loss_from_similarity(LossKind::Clip, &up, 0.07, sig).unwrap().loss;
            assert!(l1 < l0);
        }
    }
}

#[test]
fn clip_minimum_approached_at_perfect_separation() {
    let sig = SiglipParams { log_scale: 0.0, bias: 0.0 };
    let mut prev = f64::INFINITY;
    for step in 0..=10 {
        let a = step as f64 / 10.0;
        let s = DenseMatrix::from_fn(3, 3, |i, j| if i == j { a } else { -a }).unwrap();
        let l = loss_from_similarity(LossKind::Clip, &s, 0.1, sig).unwrap().loss;
        assert!(l < prev);
        prev = l;
    }
    assert!(prev < 1e-8);
}

fn noise_free_pairs() -> ContrastivePairs {
    let cfg = SynthConfig { n_patients: 20, noise_sd: 0.0, view_informativeness: 1.0, seed: 4, ..Default::default() };
    let cohort = synth_cohort(&cfg).unwrap();
    build_pairs(&cohort, None, 0).unwrap()
}

#[test]
fn training_is_deterministic() {
    let pairs = noise_free_pairs();
    let cfg = ContrastiveConfig { epochs: 3, seed: 7, ..Default::default() };
    let a = train_contrastive(&pairs, &cfg).unwrap();
    let b = train_contrastive(&pairs, &cfg).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.history, b.history);
    let ck = projection_checkpoint(&a.params, &cfg).unwrap();
    let bytes = ck.to_bytes();
    let back = coro_core::checkpoint::Checkpoint::from_bytes(&bytes).unwrap();
    let (p, c) = projection_from_checkpoint(&back).unwrap();
    assert_eq!(p, a.params);
    assert_eq!(c, cfg);
}

#[test]
fn noise_free_training_aligns() {
    let pairs = noise_free_pairs();
    let cfg = ContrastiveConfig { epochs: 150, ..Default::default() };
    let run = train_contrastive(&pairs, &cfg).unwrap();
    assert!(!run.aborted);
    let first = run.history.first().unwrap().loss;
    let last = run.history.last().unwrap().loss;
    assert!(last < first);
    let m = pairs.evaluate(&run.params, true).unwrap();
    assert_eq!(m.video_to_text.recall_at(1), 1.0);
    assert!(m.video_to_text.recall_monotone() && m.text_to_video.recall_monotone());
    assert!(m.alignment > 0.9, "alignment {}", m.alignment);
    let all = pairs.evaluate(&run.params, false).unwrap();
    assert!(all.video_to_text.recall_at(1) <= 1.0 && all.video_to_text.ranks.iter().all(|&r| r >= 1));
}
