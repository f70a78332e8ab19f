use stuffed_maps::series::*;
use stuffed_maps::spectral::*;

fn main() {
    let cell = CellWeightVar::new(0, vec![2, 2]);
    let spec = WeightSpec::new(vec![cell.clone()], 2);
    let disk = solve_disk(&spec).unwrap();
    println!("final tau2 = {}", disk.eff_tau.get(&2).unwrap());
    println!("final G2   = {}", disk.moments.get(&2).unwrap());
}
