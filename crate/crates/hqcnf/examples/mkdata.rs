use hqcnf::data::{synthetic_digits, write_idx};
use hqcnf::testutil;

fn main() {
    let dir = std::env::args().nth(1).expect("usage: mkdata DIR [COUNT]");
    let count = std::env::args().nth(2).map_or(200, |c| c.parse().unwrap());
    let ds = synthetic_digits(count, &mut testutil::rng(7));
    let (images, labels) = write_idx(&ds);
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(format!("{dir}/train-images-idx3-ubyte"), images).unwrap();
    std::fs::write(format!("{dir}/train-labels-idx1-ubyte"), labels).unwrap();
    println!("wrote {count} images to {dir}");
}
