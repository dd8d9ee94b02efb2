int x;

int main() {
#pragma omp parallel
  {
    int t;
#pragma omp single nowait
    x = 1;
#pragma omp barrier
    t = x + 1;
  }
}
