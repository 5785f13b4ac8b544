//! Index arithmetic on the torus `V_n = {-n..n}^d`: reduction modulo `V_n`,
//! flat indexing and lattice shifts of a field.

use torusnet::{cube_indices, mod_torus, shift_field, LatticeShape, TorusIndex};

fn main() -> torusnet::Result<()> {
    let shape = LatticeShape::new(2, 2)?;
    println!("V_2 in d=2 has {} sites (side {})", shape.site_count(), shape.side());

    for raw in [[3i64, 0], [-3, 7], [12, -12]] {
        let r = mod_torus(&raw, &shape);
        println!("{raw:?} mod V_2 = {r}  (flat {})", shape.flat(&r));
    }

    // A field labelled by its own flat index makes the shift visible.
    let field: Vec<usize> = (0..shape.site_count()).collect();
    let j = TorusIndex::new(&[1, -1]);
    let shifted = shift_field(&field, &shape, &j);
    println!("(S^j X)^k = X^(j+k) for j = {j}:");
    for k in cube_indices(&shape).iter().take(5) {
        let flat = shape.flat(k);
        println!("  k = {k}: X^(j+k) = X[{}] = {}", shifted[flat], shape.index(shifted[flat]));
    }
    Ok(())
}
