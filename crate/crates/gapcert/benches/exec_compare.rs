fn main() {
    // Placeholder until the library surface is complete; see the final bench
    // suite for the sequential-vs-parallel comparison.
}
