use chainrec::chain::build_step_graph;
use chainrec::expr::parse_map_expr;
use chainrec::grid::{Grid, Membership};
use chainrec::words::{GeneratorSystem, Word};
use chainrec::IntervalBox2;
use std::time::Instant;

fn main() {
    let sys = GeneratorSystem::new(vec![
        parse_map_expr("z^2").unwrap(),
        parse_map_expr("z^3").unwrap(),
    ])
    .unwrap();
    for depth in [6u32, 7, 8] {
        let grid = Grid::new(
            IntervalBox2::new(-1.125, 1.125, -1.125, 1.125).unwrap(),
            depth,
            Membership::Disc { center_re: 0.0, center_im: 0.0, radius: 1.0 },
        )
        .unwrap();
        for (gi, eps) in [(0usize, 0.1f64), (0, 0.02), (1, 0.1)] {
            let g = Word::new(vec![gi], 2).unwrap();
            let t0 = Instant::now();
            let gr = build_step_graph(&grid, &sys, &g, eps, 3).unwrap();
            let t1 = Instant::now();
            let rec = gr.recurrent_cells();
            let t2 = Instant::now();
            println!(
                "depth {depth} g=z^{} eps {eps}: nodes {} build {:.2}s scc {:.2}s rec {}",
                if gi == 0 { 2 } else { 3 },
                gr.node_cells().len(),
                (t1 - t0).as_secs_f64(),
                (t2 - t1).as_secs_f64(),
                rec.len()
            );
        }
    }
}
