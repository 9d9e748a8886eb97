//! Print the constants of the capacity formula.

use adder_capacity::entropy::{constants, entropy, s3, s4};

fn main() -> adder_capacity::Result<()> {
    let k = constants();
    println!("delta       = {:.17}", k.delta);
    println!("r           = {:.17}", k.r_const);
    println!("lambda_star = {:.17}", k.lambda_star);
    println!("capacity    = {:.17}", k.capacity);
    println!("1/capacity  = {:.17}", 1.0 / k.capacity);

    let a = k.a_star();
    let c = k.c_star();
    println!("H2(1/2-d, 1/2+d) = {:.17}", entropy(&[a, 1.0 - a])?);
    println!("S4(a*, a*, c*)   = {:.17}", s4(a, a, c)?);
    println!("S3(x*)           = {:.17}", s3(2.0 * a * (1.0 - a) + 2.0 * c)?);
    Ok(())
}
