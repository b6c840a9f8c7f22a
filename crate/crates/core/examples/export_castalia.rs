//! Writes the procedural Castalia-class shape model in the tabular layout.
//!
//! ```text
//! cargo run -p smallbody-gnc --example export_castalia -- 3 > castalia_like.tab
//! ```

use smallbody_gnc::mesh::shapes::castalia_like;

fn main() {
    let level = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("subdivision level must be an integer"))
        .unwrap_or(3);
    print!("{}", castalia_like(level).to_tabular());
}
