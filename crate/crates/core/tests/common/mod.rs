pub mod quad_oracle;
