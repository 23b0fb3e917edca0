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
    let grid = Grid::new(
        IntervalBox2::new(-1.125, 1.125, -1.125, 1.125).unwrap(),
        8,
        Membership::Disc { center_re: 0.0, center_im: 0.0, radius: 1.0 },
    )
    .unwrap();
    let g = Word::new(vec![0], 2).unwrap();
    let gr = build_step_graph(&grid, &sys, &g, 0.1, 3).unwrap();
    // count successor emissions
    let mut edges: u64 = 0;
    let t0 = Instant::now();
    for c in gr.node_cells().to_vec() {
        edges += gr.successors_count(c);
    }
    let t1 = Instant::now();
    println!("nodes {} emissions {} in {:.2}s -> {:.1} ns/emission",
        gr.node_cells().len(), edges, (t1-t0).as_secs_f64(),
        (t1-t0).as_secs_f64()*1e9/edges as f64);
    let t2 = Instant::now();
    let rec = gr.recurrent_cells();
    println!("scc {:.2}s rec {}", t2.elapsed().as_secs_f64(), rec.len());
}
