fn main() {
    println!("tamp");
}
