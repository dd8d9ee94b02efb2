int x;

int main() {
#pragma omp parallel
  {
    int t;
#pragma omp single nowait
    x = 1;
    t = x + 1;
  }
}
