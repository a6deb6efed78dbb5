fn main() {
    println!("corrseg");
}
