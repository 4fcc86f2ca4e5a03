pub mod fine_step;
