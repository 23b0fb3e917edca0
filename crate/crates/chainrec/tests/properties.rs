//! Property tests for the DSL, the interval enclosures, and the cell-set
//! algebra.

use chainrec::expr::{eval_box, eval_point, parse_map_expr, Expr, MapExpr};
use chainrec::grid::{BoxSet, Cell, Grid, Membership};
use chainrec::words::{apply_word, word_box_image, GeneratorSystem, Word};
use chainrec::IntervalBox2;
use num_complex::Complex64;
use proptest::prelude::*;

fn arb_real() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(0.0),
        Just(1.0),
        Just(-0.5),
        -2.0..2.0f64,
        -100.0..100.0f64,
    ]
}

fn arb_const() -> impl Strategy<Value = Complex64> {
    (arb_real(), arb_real()).prop_map(|(re, im)| Complex64::new(re, im))
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        3 => Just(Expr::Var),
        2 => arb_const().prop_map(Expr::Const),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), 0u32..6).prop_map(|(a, k)| Expr::Pow(Box::new(a), k)),
            (arb_real(), inner).prop_map(|(s, e)| Expr::Scale(s, Box::new(e))),
        ]
    })
}

fn arb_box() -> impl Strategy<Value = IntervalBox2> {
    (-1.2..1.2f64, 0.0..0.6f64, -1.2..1.2f64, 0.0..0.6f64).prop_map(|(re, rw, im, iw)| {
        IntervalBox2::new(re, re + rw, im, im + iw).unwrap()
    })
}

proptest! {
    /// Printing a parsed expression and parsing it back reproduces the same
    /// tree: parse(print(parse(s))) = parse(s).
    #[test]
    fn print_parse_round_trip(raw in arb_expr()) {
        let source = MapExpr::from_root(raw).to_string();
        // raw trees may fold differently (constant folding, scale rewriting);
        // reparse once to reach the parser's normal form first
        if let Ok(normal) = parse_map_expr(&source) {
            let printed = normal.to_string();
            let reparsed = parse_map_expr(&printed)
                .unwrap_or_else(|e| panic!("`{printed}` does not reparse: {e}"));
            prop_assert_eq!(normal, reparsed);
        }
    }

    /// Every sampled point image lies inside the box image.
    #[test]
    fn enclosure_soundness(raw in arb_expr(), b in arb_box(), seed in 0u64..1000) {
        let e = MapExpr::from_root(raw);
        let img = eval_box(&e, &b);
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next01 = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..256 {
            let p = Complex64::new(
                (b.re_lo + next01() * (b.re_hi - b.re_lo)).min(b.re_hi),
                (b.im_lo + next01() * (b.im_hi - b.im_lo)).min(b.im_hi),
            );
            let v = eval_point(&e, p);
            if v.re.is_finite() && v.im.is_finite() {
                prop_assert!(img.contains(v), "{v} escapes {img:?}");
            }
        }
    }

    /// eval_box on the identity expression is exact.
    #[test]
    fn identity_law(b in arb_box()) {
        let id = parse_map_expr("z").unwrap();
        prop_assert_eq!(eval_box(&id, &b), b);
    }
}

fn small_grid() -> Grid {
    Grid::new(
        IntervalBox2::new(-1.0, 1.0, -1.0, 1.0).unwrap(),
        4,
        Membership::All,
    )
    .unwrap()
}

fn arb_cells() -> impl Strategy<Value = Vec<Cell>> {
    proptest::collection::vec((0u32..16, 0u32..16).prop_map(|(ix, iy)| Cell::new(ix, iy)), 0..40)
}

fn set_of(cells: Vec<Cell>) -> BoxSet {
    BoxSet::from_cells(small_grid(), cells).unwrap()
}

proptest! {
    /// Union, intersection, difference, and complement obey Boolean-algebra
    /// laws.
    #[test]
    fn boolean_algebra_laws(a in arb_cells(), b in arb_cells(), c in arb_cells()) {
        let a = set_of(a);
        let b = set_of(b);
        let c = set_of(c);
        // commutativity and idempotence
        prop_assert_eq!(a.union(&b), b.union(&a));
        prop_assert_eq!(a.intersect(&b), b.intersect(&a));
        prop_assert_eq!(a.union(&a), a.clone());
        prop_assert_eq!(a.intersect(&a), a.clone());
        // distributivity
        prop_assert_eq!(
            a.intersect(&b.union(&c)),
            a.intersect(&b).union(&a.intersect(&c))
        );
        prop_assert_eq!(
            a.union(&b.intersect(&c)),
            a.union(&b).intersect(&a.union(&c))
        );
        // De Morgan within the grid
        prop_assert_eq!(
            a.union(&b).complement(),
            a.complement().intersect(&b.complement())
        );
        // difference via complement
        prop_assert_eq!(a.difference(&b), a.intersect(&b.complement()));
        // double complement
        prop_assert_eq!(a.complement().complement(), a.clone());
    }

    /// s is contained in fatten(s, eps), monotonically in eps.
    #[test]
    fn fatten_monotone(cells in arb_cells(), e1 in 0.0..0.3f64, e2 in 0.0..0.3f64) {
        let s = set_of(cells);
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let f_lo = s.fatten(lo);
        let f_hi = s.fatten(hi);
        prop_assert!(s.is_subset(&f_lo));
        prop_assert!(f_lo.is_subset(&f_hi));
    }

    /// Hausdorff distance is symmetric and satisfies the triangle inequality
    /// up to twice the cell diameter.
    #[test]
    fn hausdorff_symmetric_triangle(
        a in arb_cells(), b in arb_cells(), c in arb_cells()
    ) {
        prop_assume!(!a.is_empty() && !b.is_empty() && !c.is_empty());
        let a = set_of(a);
        let b = set_of(b);
        let c = set_of(c);
        let ab = a.hausdorff(&b).unwrap();
        let ba = b.hausdorff(&a).unwrap();
        prop_assert_eq!(ab, ba);
        let ac = a.hausdorff(&c).unwrap();
        let cb = c.hausdorff(&b).unwrap();
        let slack = 2.0 * small_grid().cell_diameter();
        prop_assert!(ab <= ac + cb + slack, "{ab} > {ac} + {cb} + {slack}");
    }
}

fn two_gen_system() -> GeneratorSystem {
    GeneratorSystem::new(vec![
        parse_map_expr("z^2").unwrap(),
        parse_map_expr("0.5*z + 0.1").unwrap(),
    ])
    .unwrap()
}

fn arb_word() -> impl Strategy<Value = Word> {
    proptest::collection::vec(0usize..2, 0..5).prop_map(|idxs| Word::new(idxs, 2).unwrap())
}

proptest! {
    /// Concatenation acts as composition, and occurrence counts add.
    #[test]
    fn word_concat_composition(w1 in arb_word(), w2 in arb_word(),
                               re in -0.9..0.9f64, im in -0.9..0.9f64) {
        let sys = two_gen_system();
        let p = Complex64::new(re, im);
        let w = w1.concat(&w2);
        let composed = apply_word(&sys, &w, p);
        let nested = apply_word(&sys, &w1, apply_word(&sys, &w2, p));
        prop_assert!((composed - nested).norm() <= 1e-9 * (1.0 + nested.norm()));
        for g in 0..2 {
            prop_assert_eq!(w.count_of(g), w1.count_of(g) + w2.count_of(g));
        }
    }

    /// Word box images enclose sampled word point images.
    #[test]
    fn word_box_image_soundness(w in arb_word(), b in arb_box(), seed in 0u64..100) {
        let sys = two_gen_system();
        let img = word_box_image(&sys, &w, &b);
        let mut state = seed.wrapping_mul(0x2545f4914f6cdd1d).wrapping_add(7);
        let mut next01 = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let p = Complex64::new(
                (b.re_lo + next01() * (b.re_hi - b.re_lo)).min(b.re_hi),
                (b.im_lo + next01() * (b.im_hi - b.im_lo)).min(b.im_hi),
            );
            prop_assert!(img.contains(apply_word(&sys, &w, p)));
        }
    }
}
