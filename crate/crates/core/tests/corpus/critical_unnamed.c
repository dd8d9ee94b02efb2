int a[100];
int sum;

int main() {
  int i;
#pragma omp parallel for
  for (i = 0; i < 100; i++) {
#pragma omp critical
    sum = sum + a[i];
  }
}
