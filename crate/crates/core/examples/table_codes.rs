//! Prints the truncated spectra of the six reference codes.
use std::time::Instant;

use gfq_conv::spectrum::{compute_spectrum, verify_truncation};
use gfq_conv::{Code, Constellation, FieldSpec};

fn main() {
    for (q, codes) in [(16, [(12, 4, 0), (10, 12, 3), (13, 7, 11)]), (64, [(41, 2, 0), (41, 1, 24), (31, 5, 18)])] {
        let field = FieldSpec::default_for_q(q).unwrap();
        let cons = Constellation::qam(&field).unwrap();
        for (a1, a2, a3) in codes {
            let code = Code::from_values(field.clone(), a1, a2, a3).unwrap();
            let t = Instant::now();
            let s = compute_spectrum(&code, &cons);
            let tr = verify_truncation(&code, &cons);
            println!(
                "GF({q}) ({a1},{a2},{a3}): d1={}/{} n1={} {:?} d2={}/{} n2={} {:?} trunc={} [{:.2?}]",
                s.d1_num, s.scale_sq, s.n1, s.n1_by_length, s.d2_num, s.scale_sq, s.n2, s.n2_by_length, tr.num,
                t.elapsed()
            );
        }
    }
}
