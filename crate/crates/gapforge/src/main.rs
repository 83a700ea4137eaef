fn main() {
    println!("gapforge: under construction");
}
