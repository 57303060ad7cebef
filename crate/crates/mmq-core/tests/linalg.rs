//! Dense LU kernel: round-trip accuracy, transposed solves, pivoting
//! regressions, and degenerate inputs.

use mmq_core::linalg::{solve_dense, LuFactor, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn identity_round_trip() {
    let lu = LuFactor::new(Mat::identity(4)).unwrap();
    let mut b = vec![1.0, -2.0, 3.0, 0.5];
    let expect = b.clone();
    lu.solve(&mut b);
    assert_eq!(b, expect);
    lu.solve_transposed(&mut b);
    assert_eq!(b, expect);
}

#[test]
fn known_two_by_two() {
    let a = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
    let mut b = vec![5.0, 10.0];
    solve_dense(a, &mut b).unwrap();
    assert!(max_abs_diff(&b, &[1.0, 3.0]) <= 1e-14);
}

#[test]
fn random_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..500 {
        let n = rng.gen_range(2..=8);
        let mut a = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = rng.gen_range(-2.0..2.0);
            }
            a[(i, i)] += 0.5; // keep determinants away from zero
        }
        let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mut b = vec![0.0; n];
        let mut bt = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                b[i] += a[(i, j)] * x_true[j];
                bt[i] += a[(j, i)] * x_true[j];
            }
        }
        let lu = LuFactor::new(a).unwrap();
        lu.solve(&mut b);
        assert!(max_abs_diff(&b, &x_true) <= 1e-9, "solve drift on trial {trial}");
        lu.solve_transposed(&mut bt);
        assert!(max_abs_diff(&bt, &x_true) <= 1e-9, "transposed drift on trial {trial}");
    }
}

#[test]
fn pivot_relocation_regression() {
    // This transposed-generator system (last row replaced by the
    // normalization constraint) produces the pivot sequence 0,1,5,3,5,5:
    // step 4 relocates a row that already received the step-2 multiplier.
    // A substitution pass that interleaves swaps with elimination pairs
    // the wrong multiplier with the wrong entry and returns garbage.
    let q = [
        [-5.810981431008845, 1.643341510800137, 1.971193599846921, 1.190291125025566, 0.6296023390280401, 0.37655285630818014],
        [0.0, -2.0274262284957167, 1.0658486936361051, 0.9615775348596114, 0.0, 0.0],
        [0.36287339875368074, 0.0, -1.2834068836093684, 0.38255866693117796, 0.14547343715010053, 0.3925013807744091],
        [1.6521024261742783, 0.545886821883272, 1.0225758763494825, -5.175924774324087, 1.5069559919599718, 0.4484036579570825],
        [0.0, 1.0685627954005605, 0.6502371885995237, 1.9119882741417706, -3.6807882581418547, 0.05],
        [1.2961458463816362, 0.0, 1.0151178155138734, 0.972605873209623, 1.109761422256946, -4.393630957362078],
    ];
    let mut a = Mat::zeros(6, 6);
    for i in 0..6 {
        for j in 0..6 {
            a[(i, j)] = q[j][i]; // transpose
        }
    }
    for j in 0..6 {
        a[(5, j)] = 1.0;
    }
    let mut p = vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    solve_dense(a, &mut p).unwrap();
    // Stationary distribution: strictly positive, balanced.
    assert!(p.iter().all(|&x| x > 0.0), "p = {p:?}");
    for j in 0..6 {
        let balance: f64 = (0..6).map(|i| p[i] * q[i][j]).sum();
        assert!(balance.abs() <= 1e-12, "balance residual {balance} in column {j}");
    }
}

#[test]
fn singular_matrices_are_rejected() {
    let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
    assert!(LuFactor::new(a).is_err());
    let z = Mat::zeros(3, 3);
    assert!(LuFactor::new(z).is_err());
}

#[test]
fn matrix_helpers() {
    let a = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let t = a.transpose();
    assert_eq!(t[(0, 1)], 3.0);
    let prod = a.matmul(&Mat::identity(2));
    assert_eq!(prod, a);
    assert!(Mat::from_rows(&[vec![1.0], vec![2.0, 3.0]]).is_err());
    assert!(Mat::from_rows(&[]).is_err());
}
