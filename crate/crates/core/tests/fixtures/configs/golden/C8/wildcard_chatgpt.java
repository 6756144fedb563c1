 interface DayCounter {     int days(int month, int year); } public class DaysInMonth implements DayCounter {     @Override     public int days(int month, int year) {         switch (month) {             case 2:                 return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 ? 29 : 28;             case 4: case 6: case 9: case 11:                 return 30;             default:                 return 31;         }     }     public static void main(String[] args) {         Scanner scanner = new Scanner(System.in);         System.out.print("Enter a month and year: ");         int month = scanner.nextInt();         int year = scanner.nextInt();         System.out.println("Days: " + new DaysInMonth().days(month, year));     } } 