int main() {
#pragma omp parallel
  {
    // S1
#pragma omp single
    {
      // S2
    } // implicit barrier
    // S3
#pragma omp single
    {
      // S4
    } // implicit barrier
    // S5
  }
}
