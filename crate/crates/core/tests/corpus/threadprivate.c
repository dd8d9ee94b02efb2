int scratch;
#pragma omp threadprivate(scratch)

int main() {
#pragma omp parallel
  {
    scratch = 5;
    scratch = scratch + 1;
  }
}
