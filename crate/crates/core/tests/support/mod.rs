pub mod svr_oracle;
