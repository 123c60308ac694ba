mod conv;
mod elementwise;
mod matmul;
mod seq;
