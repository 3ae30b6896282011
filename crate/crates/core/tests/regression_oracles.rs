use std::collections::BTreeMap;

use nightcast_core::linalg::Matrix;
use nightcast_core::regression::fit_transition;
use nightcast_core::{
    assemble_forecast, estimate_transition, generate_synthetic, global_transition, make_scenario,
    project_station, rmse, to_elec_shares, to_vald_shares, Dataset, DeclarationState, Metric,
    PartySet, StationRecord, SynthSpec, TransitionMatrix,
};
use proptest::prelude::*;

fn station(id: &str, ref_a: u64, e_ref: u64, cur_p: u64, e_cur: u64) -> StationRecord {
    StationRecord {
        id: id.into(),
        name: id.into(),
        electorate_ref: e_ref,
        electorate_cur: e_cur,
        ref_votes: vec![ref_a],
        cur_votes: Some(vec![cur_p]),
        declared_rank: None,
    }
}

fn two_party(stations: Vec<StationRecord>) -> Dataset {
    Dataset::new(
        PartySet::new(&["A"], &["P"]).unwrap(),
        stations,
        BTreeMap::new(),
    )
    .unwrap()
}

fn ids(ds: &Dataset) -> Vec<&str> {
    ds.constituencies().iter().map(|c| c.id()).collect()
}

fn close(a: &Matrix, b: &[[f64; 2]; 2], tol: f64) -> bool {
    (0..2).all(|i| (0..2).all(|j| (a[(i, j)] - b[i][j]).abs() <= tol))
}

#[test]
fn hand_built_two_party_system() {
    // ref (A, NV) = (100,50), (80,100), (60,30); cur = X · ref with
    // X = [[0.5, 0.2], [0.5, 0.8]]: (60,90), (60,120), (36,54).
    let ds = two_party(vec![
        station("a", 100, 150, 60, 150),
        station("b", 80, 180, 60, 180),
        station("c", 60, 90, 36, 90),
    ]);
    let decl = DeclarationState::all_declared(&ds).unwrap();
    let x = estimate_transition(&ds, &decl, &ids(&ds)).unwrap();
    assert!(close(&x.entries, &[[0.5, 0.2], [0.5, 0.8]], 1e-8), "{x:?}");
    assert_eq!(x.n_stations_used, 3);

    let g = global_transition(&ds, &decl).unwrap();
    assert!(g.entries.frobenius_distance(&x.entries) < 1e-12);
}

#[test]
fn identity_when_elections_coincide() {
    let recs: Vec<StationRecord> = [(100, 300), (250, 400), (10, 90), (70, 70)]
        .iter()
        .enumerate()
        .map(|(i, &(a, e))| station(&format!("s{i}"), a, e, a, e))
        .collect();
    let ds = two_party(recs);
    let decl = DeclarationState::all_declared(&ds).unwrap();
    let x = estimate_transition(&ds, &decl, &ids(&ds)).unwrap();
    assert!(x.entries.frobenius_distance(&Matrix::identity(2)) < 1e-8);
}

#[test]
fn single_station_minimum_norm() {
    // One equation per row, two unknowns: x = b · a / |a|^2.
    let ds = two_party(vec![station("a", 30, 70, 55, 80), station("b", 1, 2, 1, 2)]);
    let mut decl = DeclarationState::new();
    decl.declare(&ds, "a", &[55]).unwrap();
    let x = estimate_transition(&ds, &decl, &["a", "b"]).unwrap();
    let a = [30.0, 40.0];
    let norm = a[0] * a[0] + a[1] * a[1];
    let expected = [
        [55.0 * a[0] / norm, 55.0 * a[1] / norm],
        [25.0 * a[0] / norm, 25.0 * a[1] / norm],
    ];
    assert!(close(&x.entries, &expected, 1e-8), "{x:?}");
    let p = project_station(&x, &a, 80.0).unwrap();
    assert!((p[0] - 55.0).abs() < 1e-8 && (p[1] - 25.0).abs() < 1e-8);
}

#[test]
fn no_declared_members_is_an_error() {
    let ds = two_party(vec![station("a", 1, 2, 1, 2), station("b", 1, 2, 1, 2)]);
    let decl = DeclarationState::new();
    assert!(estimate_transition(&ds, &decl, &["a"]).is_err());
    assert!(global_transition(&ds, &decl).is_err());
}

#[test]
fn projection_examples() {
    let id = TransitionMatrix {
        entries: Matrix::identity(3),
        group_id: None,
        n_stations_used: 1,
    };
    assert_eq!(
        project_station(&id, &[60.0, 40.0, 100.0], 200.0).unwrap(),
        vec![60.0, 40.0, 100.0]
    );
    let x = TransitionMatrix {
        entries: Matrix::from_rows(&[vec![0.5, 0.2], vec![0.5, 0.8]]).unwrap(),
        group_id: None,
        n_stations_used: 1,
    };
    let p = project_station(&x, &[100.0, 50.0], 150.0).unwrap();
    assert!((p[0] - 60.0).abs() < 1e-12 && (p[1] - 90.0).abs() < 1e-12);

    // Row 0 gives -20, clipped; the rest rescaled onto the electorate.
    let neg = TransitionMatrix {
        entries: Matrix::from_rows(&[vec![-0.5, 0.1], vec![0.5, 0.4]]).unwrap(),
        group_id: None,
        n_stations_used: 1,
    };
    let p = project_station(&neg, &[100.0, 300.0], 400.0).unwrap();
    assert_eq!(p[0], 0.0);
    assert!((p[1] - 400.0).abs() < 1e-9);
    assert!(project_station(&neg, &[1.0, 2.0, 3.0], 6.0).is_err());
}

#[test]
fn share_and_rmse_examples() {
    let t = [60.0, 40.0, 100.0];
    assert_eq!(to_elec_shares(&t).unwrap(), vec![30.0, 20.0, 50.0]);
    assert_eq!(to_vald_shares(&t).unwrap(), vec![60.0, 40.0]);
    assert_eq!(to_elec_shares(&[7.0, 0.0]).unwrap(), vec![100.0, 0.0]);
    assert_eq!(to_vald_shares(&[7.0, 0.0]).unwrap(), vec![100.0]);
    assert!(to_vald_shares(&[0.0, 0.0, 50.0]).is_err());
    assert!(to_elec_shares(&[0.0, 0.0]).is_err());

    assert_eq!(
        rmse(&[60.0, 90.0], &[50.0, 100.0], Metric::Abs).unwrap(),
        10.0
    );
    for m in Metric::ALL {
        assert_eq!(rmse(&t, &t, m).unwrap(), 0.0);
    }
    let a = rmse(&[60.0, 40.0, 10.0], &[50.0, 50.0, 30.0], Metric::Vald).unwrap();
    let b = rmse(&[60.0, 40.0, 510.0], &[50.0, 50.0, 530.0], Metric::Vald).unwrap();
    assert!((a - b).abs() < 1e-12);
    assert!(rmse(&[1.0, 2.0], &[1.0, 2.0, 3.0], Metric::Abs).is_err());
}

/// Minimum-norm least squares for a k×2 design (k ≤ 3) written out by
/// hand: normal equations with the explicit 2×2 inverse when the design has
/// full column rank, `Aᵀ / ‖A‖²` when it has rank one.
fn oracle(design: &[[f64; 2]], response: &[[f64; 2]]) -> [[f64; 2]; 2] {
    let (mut s00, mut s01, mut s11) = (0.0, 0.0, 0.0);
    for r in design {
        s00 += r[0] * r[0];
        s01 += r[0] * r[1];
        s11 += r[1] * r[1];
    }
    let det = s00 * s11 - s01 * s01;
    let mut out = [[0.0; 2]; 2];
    if det.abs() > 1e-9 * (s00 * s11).max(1.0) {
        let inv = [[s11 / det, -s01 / det], [-s01 / det, s00 / det]];
        for i in 0..2 {
            let aty = [
                design
                    .iter()
                    .zip(response)
                    .map(|(a, y)| a[0] * y[i])
                    .sum::<f64>(),
                design
                    .iter()
                    .zip(response)
                    .map(|(a, y)| a[1] * y[i])
                    .sum::<f64>(),
            ];
            for j in 0..2 {
                out[i][j] = inv[j][0] * aty[0] + inv[j][1] * aty[1];
            }
        }
    } else {
        let fro = s00 + s11;
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = design
                    .iter()
                    .zip(response)
                    .map(|(a, y)| a[j] * y[i])
                    .sum::<f64>()
                    / fro;
            }
        }
    }
    out
}

fn fit(design: &[[f64; 2]], response: &[[f64; 2]]) -> Matrix {
    fit_transition(
        design.iter().zip(response).map(|(a, y)| (&a[..], &y[..])),
        2,
        2,
    )
    .unwrap()
    .entries
}

#[test]
fn brute_force_rank_deficient_designs() {
    // Proportional rows: rank one.
    let design = [[10.0, 20.0], [30.0, 60.0], [5.0, 10.0]];
    let response = [[12.0, 18.0], [40.0, 50.0], [3.0, 12.0]];
    assert!(close(
        &fit(&design, &response),
        &oracle(&design, &response),
        1e-8
    ));
    let design = [[10.0, 0.0], [7.0, 0.0]];
    let response = [[4.0, 6.0], [1.0, 6.0]];
    assert!(close(
        &fit(&design, &response),
        &oracle(&design, &response),
        1e-8
    ));
}

proptest! {
    #[test]
    fn brute_force_small_instances(
        rows in prop::collection::vec((1u32..400, 0u32..400, 0u32..400, 0u32..400), 1..=3),
        collinear in any::<bool>(),
    ) {
        let mut design: Vec<[f64; 2]> = rows.iter().map(|r| [r.0 as f64, r.1 as f64]).collect();
        if collinear {
            let base = design[0];
            for (k, r) in design.iter_mut().enumerate().skip(1) {
                *r = [base[0] * (k + 1) as f64, base[1] * (k + 1) as f64];
            }
        }
        let response: Vec<[f64; 2]> = rows.iter().map(|r| [r.2 as f64, r.3 as f64]).collect();
        let got = fit(&design, &response);
        let want = oracle(&design, &response);
        prop_assert!(close(&got, &want, 1e-8), "got {:?} want {:?}", got, want);
    }
}

#[test]
fn residuals_orthogonal_to_design() {
    let syn = generate_synthetic(&SynthSpec {
        noise_sd: 3.0,
        seed: 11,
        ..SynthSpec::default()
    })
    .unwrap();
    let ds = &syn.dataset;
    let decl = DeclarationState::all_declared(ds).unwrap();
    for g in 0..3u32 {
        let members: Vec<&str> = ds
            .constituencies()
            .iter()
            .zip(&syn.true_grouping)
            .filter(|(_, &l)| l == g)
            .map(|(c, _)| c.id())
            .collect();
        let x = estimate_transition(ds, &decl, &members).unwrap();
        let nr = ds.parties().n_ref();
        for i in 0..ds.parties().n_cur() {
            let mut grad = vec![0.0; nr];
            for id in &members {
                let c = ds.station(id).unwrap();
                let r: Vec<f64> = c.ref_votes().iter().map(|&v| v as f64).collect();
                let fitted = x.apply(&r).unwrap()[i];
                let resid = c.cur_votes().unwrap()[i] as f64 - fitted;
                for (g, a) in grad.iter_mut().zip(&r) {
                    *g += a * resid;
                }
            }
            for v in grad {
                assert!(v.abs() < 1e-6, "party {i}: {v}");
            }
        }
    }
}

fn members_of(syn: &nightcast_core::SyntheticElection, g: u32) -> Vec<&str> {
    syn.dataset
        .constituencies()
        .iter()
        .zip(&syn.true_grouping)
        .filter(|(_, &l)| l == g)
        .map(|(c, _)| c.id())
        .collect()
}

#[test]
fn noiseless_synthetic_recovery() {
    for seed in [1, 7, 42] {
        let syn = generate_synthetic(&SynthSpec {
            seed,
            ..SynthSpec::default()
        })
        .unwrap();
        let ds = &syn.dataset;
        let all = DeclarationState::all_declared(ds).unwrap();
        for (g, truth) in syn.true_matrices.iter().enumerate() {
            let x = estimate_transition(ds, &all, &members_of(&syn, g as u32)).unwrap();
            let d = x.entries.frobenius_distance(&truth.entries);
            assert!(d <= 1e-8, "seed {seed} group {g}: {d}");
        }

        let decl = make_scenario(ds, 0.5, seed).unwrap();
        let f = assemble_forecast(ds, &decl, &syn.true_grouping).unwrap();
        for (a, b) in f.party_totals.iter().zip(ds.true_totals().unwrap()) {
            assert!((a - b as f64).abs() <= 1e-6, "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn single_matrix_global_recovery() {
    let syn = generate_synthetic(&SynthSpec {
        n_groups: 1,
        seed: 3,
        ..SynthSpec::default()
    })
    .unwrap();
    let decl = DeclarationState::all_declared(&syn.dataset).unwrap();
    let g = global_transition(&syn.dataset, &decl).unwrap();
    assert!(g.entries.frobenius_distance(&syn.true_matrices[0].entries) <= 1e-8);
}

#[test]
fn forecast_contracts() {
    let syn = generate_synthetic(&SynthSpec {
        noise_sd: 2.0,
        seed: 5,
        ..SynthSpec::default()
    })
    .unwrap();
    let ds = &syn.dataset;
    let all = DeclarationState::all_declared(ds).unwrap();
    let f = assemble_forecast(ds, &all, &syn.true_grouping).unwrap();
    let truth: Vec<f64> = ds
        .true_totals()
        .unwrap()
        .iter()
        .map(|&v| v as f64)
        .collect();
    assert_eq!(f.party_totals, truth);
    assert_eq!(f.undeclared_count, 0);

    // Group 2 has no declared member: global fallback, no error.
    let mut decl = DeclarationState::new();
    for (c, &g) in ds.constituencies().iter().zip(&syn.true_grouping) {
        if g != 2 {
            let v = c.cur_votes().unwrap();
            decl.declare(ds, c.id(), &v[..v.len() - 1]).unwrap();
        }
    }
    let f = assemble_forecast(ds, &decl, &syn.true_grouping).unwrap();
    assert_eq!(f.undeclared_count, 20);
    let total: f64 = f.party_totals.iter().sum();
    assert!((total - ds.total_electorate_cur() as f64).abs() < 1e-6);

    assert!(assemble_forecast(ds, &DeclarationState::new(), &syn.true_grouping).is_err());
    assert!(assemble_forecast(ds, &decl, &[0, 1]).is_err());
}
