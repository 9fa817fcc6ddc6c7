fn main() {
    println!("fforge");
}
