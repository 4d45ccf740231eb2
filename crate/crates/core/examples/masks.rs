//! Rasterize push and grasp masks and dilate a target mask.
//!
//! `cargo run --example masks`

use clutter_grasp::grid::{border_mask, dilate, rasterize_grasp, rasterize_push, roi_of_target, BitMask, Pixel};

fn main() {
    let push = rasterize_push(Pixel::new(100, 100), 0.3);
    println!(
        "push mask: {} cells ({} at 0.5, {} at 1.0), coverage {:.3}",
        push.nonzero_count(),
        push.count_value(0.5),
        push.count_value(1.0),
        push.coverage()
    );
    let clipped = rasterize_push(Pixel::new(0, 0), std::f64::consts::PI);
    println!("push off the grid corner keeps {:.3} of its cells", clipped.coverage());

    for k in [0u8, 4, 8] {
        println!("grasp k={k}: {} cells", rasterize_grasp(Pixel::new(112, 112), k).nonzero_count());
    }

    let target = BitMask::from_pixels((100..110).flat_map(|y| (100..120).map(move |x| Pixel::new(x, y))));
    println!(
        "target {} px, dilated r=10 {} px, ring {} px",
        target.count(),
        dilate(&target, 10).count(),
        border_mask(&target, 10).count()
    );
    let roi = roi_of_target(&target).expect("non-empty target");
    println!("region of interest {}x{} px", roi.width(), roi.height());
}
