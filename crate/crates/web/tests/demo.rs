use idbm_web::{exchange_holonomy, PairDemo};

#[test]
fn trajectories_have_one_row_per_frame() {
    let demo = PairDemo::new(206.8, 0.5, 1.0, 1.0).unwrap();
    for law in ["standard", "identity_based"] {
        let rows = demo.trajectory(law, 0.2, 0.9, 11).unwrap();
        assert_eq!(rows.len(), 33);
        assert_eq!(rows[0], 0.0);
        assert!((rows[30] - 1.0).abs() < 1e-12);
    }
    assert!(demo.trajectory("bogus", 0.2, 0.9, 11).is_err());
}

#[test]
fn identity_trajectories_stay_ordered_and_differ() {
    let demo = PairDemo::new(206.8, 0.5, 1.0, 2.0).unwrap();
    let a = demo.trajectory("standard", 0.9, 0.2, 21).unwrap();
    let b = demo.trajectory("identity_based", 0.9, 0.2, 21).unwrap();
    assert!(b.chunks(3).all(|r| r[1] <= r[2]));
    let gap = a
        .chunks(3)
        .zip(b.chunks(3))
        .map(|(x, y)| {
            let (p, q) = (x[1].min(x[2]), x[1].max(x[2]));
            (p - y[1]).abs().max((q - y[2]).abs())
        })
        .fold(0.0, f64::max);
    assert!(gap > 1e-3);
}

#[test]
fn density_map_is_normalized_to_its_peak() {
    let demo = PairDemo::new(206.8, 0.5, 1.0, 1.0).unwrap();
    let map = demo.density_map(0.5, 40, -4.0, 5.0).unwrap();
    assert_eq!(map.len(), 1600);
    assert_eq!(map.iter().copied().fold(0.0, f64::max), 1.0);
    assert!(map.iter().all(|v| *v >= 0.0));
}

#[test]
fn holonomy_signs() {
    assert_eq!(exchange_holonomy("fermion", 64).unwrap(), -1);
    assert_eq!(exchange_holonomy("boson", 64).unwrap(), 1);
    assert!(exchange_holonomy("anyon", 64).is_err());
    assert!(exchange_holonomy("fermion", 2).is_err());
}
