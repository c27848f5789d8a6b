//! Cross-module checks: builders feed the counting, zeta and oracle layers.

use fractal_zeta::cycle_oracle::{reduced_cycle_census, weighted_census};
use fractal_zeta::fractal_builders::{Exhaustion, Family};
use fractal_zeta::graph_core::Graph;
use fractal_zeta::scalar::rational_to_f64;
use fractal_zeta::spectral_counts::path_count_table;
use fractal_zeta::zeta_engine::{
    det_formula_zeta, euler_product, finite_ihara_zeta, zeta_from_counts, DetVariant, PrimeClass,
};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;

fn complete(n: usize) -> Graph {
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    Graph::from_edges(n, &edges).unwrap()
}

#[test]
fn spectral_counts_match_weighted_census_on_gasket() {
    let x = Exhaustion::build(Family::Gasket, 6).unwrap();
    let table = path_count_table(&x, None, 8).unwrap();
    let census = weighted_census(&x, 8, 100_000_000).unwrap();
    for row in &census.rows {
        let spectral = rational_to_f64(table.n(row.m));
        let weighted = rational_to_f64(&row.weighted_sum);
        let slack = table.err(row.m) + row.multiplicity_gap + row.tail_bound + 1e-12;
        assert!((spectral - weighted).abs() <= slack, "m = {}: {spectral} vs {weighted} (slack {slack})", row.m);
    }
}

#[test]
fn euler_product_and_count_series_agree_on_gasket() {
    let x = Exhaustion::build(Family::Gasket, 6).unwrap();
    let census = weighted_census(&x, 8, 100_000_000).unwrap();
    let classes: Vec<PrimeClass> = census.primes().map(PrimeClass::from).collect();
    let euler = euler_product(&classes, 8).unwrap();
    let table = path_count_table(&x, None, 8).unwrap();
    let series = zeta_from_counts(&table, None, 8).unwrap();
    // both expand the same limit; the table is a finite-level estimate
    for m in 1..=8 {
        let (a, b) = (rational_to_f64(euler.coeff(m)), rational_to_f64(series.z.coeff(m)));
        assert!((a - b).abs() < 0.5 * (1.0 + a.abs()), "u^{m}: {a} vs {b}");
    }
    assert_eq!(rational_to_f64(euler.coeff(3)), 16.0 / 9.0);
}

#[test]
fn degenerate_exhaustion_normalises_the_finite_zeta() {
    let g = complete(4);
    let x = Exhaustion::from_single_graph(g.clone(), 3).unwrap();
    let table = path_count_table(&x, None, 10).unwrap();
    let census = reduced_cycle_census(&g, 10, 10_000_000).unwrap();
    for row in &census {
        let expected = BigRational::new(BigInt::from(row.raw_count), BigInt::from(4));
        assert_eq!(table.n(row.m), &expected, "m = {}", row.m);
        assert_eq!(table.err(row.m), 0.0);
    }
}

#[test]
fn own_determinant_is_the_normalised_finite_zeta() {
    let x = Exhaustion::build(Family::Gasket, 4).unwrap();
    let g = x.level(3).unwrap();
    let finite = finite_ihara_zeta(g, 40).unwrap();
    let n = g.num_vertices() as f64;
    for u in [0.02, 0.05, 0.08] {
        let u = Complex64::new(u, 0.0);
        let exact = finite.z.evaluate(u).powf(1.0 / n);
        let det = det_formula_zeta(&x, u, 3, DetVariant::Own).unwrap().value;
        assert!((exact - det).norm() < 1e-10, "u = {u}: {exact} vs {det}");
    }
}

#[test]
fn built_levels_round_trip_through_both_formats() {
    for f in Family::ALL {
        let x = Exhaustion::build(f, 3).unwrap();
        for n in 1..=3 {
            let g = x.level(n).unwrap();
            assert_eq!(&Graph::parse_edge_list(&g.to_edge_list()).unwrap(), g);
            assert_eq!(&Graph::from_json(&g.to_json()).unwrap(), g);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn finite_zeta_matches_census_on_random_graphs(n in 3usize..8, mask in proptest::collection::vec(any::<bool>(), 21)) {
        // a path keeps the graph connected; the mask adds chords
        let pairs = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)));
        let edges: Vec<(usize, usize)> = pairs.zip(&mask).filter(|&((a, b), &keep)| keep || b == a + 1).map(|(e, _)| e).collect();
        let g = Graph::from_edges(n, &edges).unwrap();
        let finite = finite_ihara_zeta(&g, 8).unwrap();
        let census = reduced_cycle_census(&g, 8, 10_000_000).unwrap();
        let mut counts = vec![BigRational::from_integer(BigInt::from(0))];
        counts.extend(census.iter().map(|r| BigRational::from_integer(BigInt::from(r.raw_count))));
        let z = fractal_zeta::zeta_engine::zeta_from_reduced_counts(&counts, 8).unwrap();
        prop_assert_eq!(finite.z.coeffs(), z.z.coeffs());
    }
}
